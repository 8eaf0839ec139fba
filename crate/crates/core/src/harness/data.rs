//! Dataset loading (CSV, LIBSVM) and offline rescaling.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regression dataset held in memory, one row per instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            features,
            targets,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != self.targets.len() {
            return Err(Error::input("feature and target counts differ"));
        }
        if self.is_empty() {
            return Err(Error::input(format!("dataset '{}' is empty", self.name)));
        }
        let d = self.dim();
        if d == 0 {
            return Err(Error::input("dataset has no features"));
        }
        for (i, (x, y)) in self.features.iter().zip(&self.targets).enumerate() {
            if x.len() != d {
                return Err(Error::input(format!("row {i} has {} features, expected {d}", x.len())));
            }
            if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("row {i} has a non-finite value")));
            }
        }
        Ok(())
    }

    /// Reorders rows by `order`.
    pub fn permuted(&self, order: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: order.iter().map(|&i| self.features[i].clone()).collect(),
            targets: order.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// First `n` rows.
    pub fn truncated(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            name: self.name.clone(),
            features: self.features[..n].to_vec(),
            targets: self.targets[..n].to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataFormat {
    Csv,
    Libsvm,
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "libsvm" | "svmlight" => Ok(DataFormat::Libsvm),
            other => Err(Error::input(format!("unknown data format '{other}'"))),
        }
    }
}

/// Which CSV column holds the target.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetColumn {
    First,
    Last,
    Index(usize),
    Name(String),
}

impl FromStr for TargetColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "first" => TargetColumn::First,
            "last" => TargetColumn::Last,
            _ => match s.parse::<usize>() {
                Ok(i) => TargetColumn::Index(i),
                Err(_) => TargetColumn::Name(s.to_string()),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: DataFormat,
    pub target: TargetColumn,
    /// `None` detects a header from a non-numeric first row.
    pub has_header: Option<bool>,
    pub name: String,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, format: DataFormat) -> Self {
        let path = path.into();
        let name = path
            .file_stem()
            .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
        let target = match format {
            DataFormat::Csv => TargetColumn::Last,
            DataFormat::Libsvm => TargetColumn::First,
        };
        DatasetSpec {
            path,
            format,
            target,
            has_header: None,
            name,
        }
    }
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("'{}' is not a number", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value '{}'", field.trim()),
        });
    }
    Ok(v)
}

/// Parses CSV text. Line numbers in errors are 1-based.
pub fn parse_csv(reader: impl Read, target: &TargetColumn, has_header: Option<bool>, name: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut records = rdr.records().peekable();
    let mut header: Option<Vec<String>> = None;
    if let Some(Ok(first)) = records.peek() {
        let looks_textual = first.iter().any(|f| f.parse::<f64>().is_err());
        if has_header.unwrap_or(looks_textual) {
            header = Some(first.iter().map(str::to_string).collect());
            records.next();
        }
    }

    let mut features = Vec::new();
    let mut targets = Vec::new();
    let mut width: Option<usize> = None;
    let mut target_idx: Option<usize> = None;
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(Error::Parse {
                line,
                message: format!("expected {w} fields, found {}", rec.len()),
            });
        }
        if w < 2 {
            return Err(Error::Parse {
                line,
                message: "need at least one feature and a target".into(),
            });
        }
        let t = match target_idx {
            Some(t) => t,
            None => {
                let t = match target {
                    TargetColumn::First => 0,
                    TargetColumn::Last => w - 1,
                    TargetColumn::Index(i) if *i < w => *i,
                    TargetColumn::Index(i) => {
                        return Err(Error::input(format!(
                            "target column {i} is out of range for {w} columns"
                        )))
                    }
                    TargetColumn::Name(n) => header
                        .as_ref()
                        .and_then(|h| h.iter().position(|c| c == n))
                        .ok_or_else(|| Error::input(format!("no column named '{n}'")))?,
                };
                *target_idx.get_or_insert(t)
            }
        };
        let mut row = Vec::with_capacity(w - 1);
        for (i, f) in rec.iter().enumerate() {
            let v = parse_value(f, line)?;
            if i == t {
                targets.push(v);
            } else {
                row.push(v);
            }
        }
        features.push(row);
    }
    Dataset::new(name, features, targets)
}

/// Parses LIBSVM text: `target idx:value ...` with 1-based indices.
pub fn parse_libsvm(reader: impl BufRead, name: &str) -> Result<Dataset> {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut dim = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut parts = content.split_whitespace();
        let y = parse_value(parts.next().expect("non-empty line"), line_no)?;
        let mut row = Vec::new();
        let mut last = 0;
        for tok in parts {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected index:value, found '{tok}'"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad feature index '{idx}'"),
            })?;
            if idx == 0 || idx <= last {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("feature indices must be 1-based and increasing, found {idx}"),
                });
            }
            last = idx;
            row.push((idx - 1, parse_value(val, line_no)?));
            dim = dim.max(idx);
        }
        sparse.push(row);
        targets.push(y);
    }
    let features = sparse
        .into_iter()
        .map(|row| {
            let mut x = vec![0.0; dim];
            for (i, v) in row {
                x[i] = v;
            }
            x
        })
        .collect();
    Dataset::new(name, features, targets)
}

pub fn load(spec: &DatasetSpec) -> Result<Dataset> {
    let file = File::open(&spec.path).map_err(|e| Error::input(format!("cannot open {}: {e}", spec.path.display())))?;
    match spec.format {
        DataFormat::Csv => parse_csv(file, &spec.target, spec.has_header, &spec.name),
        DataFormat::Libsvm => parse_libsvm(BufReader::new(file), &spec.name),
    }
}

/// Per-column affine maps applied by [`rescale`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rescaling {
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
}

fn affine(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Features to `[-1, 1]`, targets to `[0, 1]`, using full-dataset min/max.
/// Constant columns become 0.
pub fn rescale(data: &mut Dataset) -> Rescaling {
    let d = data.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for x in &data.features {
        for (j, v) in x.iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
    }
    let tlo = data.targets.iter().copied().fold(f64::INFINITY, f64::min);
    let thi = data.targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for x in &mut data.features {
        for (j, v) in x.iter_mut().enumerate() {
            *v = if hi[j] > lo[j] {
                2.0 * affine(*v, lo[j], hi[j]) - 1.0
            } else {
                0.0
            };
        }
    }
    for y in &mut data.targets {
        *y = affine(*y, tlo, thi);
    }
    Rescaling {
        feature_min: lo,
        feature_max: hi,
        target_min: tlo,
        target_max: thi,
    }
}

pub fn load_and_preprocess(spec: &DatasetSpec) -> Result<Dataset> {
    let mut data = load(spec)?;
    rescale(&mut data);
    Ok(data)
}

/// Loads with the format guessed from the extension (`.csv` or LIBSVM otherwise).
pub fn load_path(path: &Path) -> Result<Dataset> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
        _ => DataFormat::Libsvm,
    };
    load_and_preprocess(&DatasetSpec::new(path, format))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_header_and_named_target() {
        let text = "a,b,y\n1,2,3\n4,5,6\n";
        let d = parse_csv(text.as_bytes(), &TargetColumn::Name("b".into()), None, "t").unwrap();
        assert_eq!(d.features, vec![vec![1.0, 3.0], vec![4.0, 6.0]]);
        assert_eq!(d.targets, vec![2.0, 5.0]);
        let d = parse_csv("1,2,3\n4,5,6\n".as_bytes(), &TargetColumn::Last, None, "t").unwrap();
        assert_eq!(d.targets, vec![3.0, 6.0]);
        let d = parse_csv("1,2,3\n".as_bytes(), &TargetColumn::Index(0), None, "t").unwrap();
        assert_eq!((d.features[0].clone(), d.targets[0]), (vec![2.0, 3.0], 1.0));
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let err = parse_csv("1,2\n3,x\n".as_bytes(), &TargetColumn::Last, Some(false), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        let err = parse_csv("1,2\n3,4,5\n".as_bytes(), &TargetColumn::Last, Some(false), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_csv("1,2\n3,NaN\n".as_bytes(), &TargetColumn::Last, Some(false), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_csv("".as_bytes(), &TargetColumn::Last, None, "t").is_err());
    }

    #[test]
    fn libsvm_parsing() {
        let text = "1.5 1:0.5 3:2\n# comment\n-2 2:1\n";
        let d = parse_libsvm(text.as_bytes(), "t").unwrap();
        assert_eq!(d.features, vec![vec![0.5, 0.0, 2.0], vec![0.0, 1.0, 0.0]]);
        assert_eq!(d.targets, vec![1.5, -2.0]);
        let err = parse_libsvm("1 2:1 1:3\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse_libsvm("1 1:1\n2 1:nan\n".as_bytes(), "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn rescaling_examples() {
        let mut d = Dataset::new(
            "t",
            vec![vec![-3.0, 7.0], vec![1.0, 7.0], vec![5.0, 7.0]],
            vec![10.0, 20.0, 30.0],
        )
        .unwrap();
        let r = rescale(&mut d);
        assert_eq!(d.features[1][0], 0.0);
        assert_eq!(d.features[0][0], -1.0);
        assert_eq!(d.features[2][0], 1.0);
        assert!(d.features.iter().all(|x| x[1] == 0.0));
        assert_eq!(d.targets, vec![0.0, 0.5, 1.0]);
        assert_eq!((r.target_min, r.target_max), (10.0, 30.0));
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("toy.csv");
        std::fs::write(&p, "x1,x2,y\n0,0,1\n2,4,3\n").unwrap();
        let d = load_path(&p).unwrap();
        assert_eq!(d.name, "toy");
        assert_eq!(d.features, vec![vec![-1.0, -1.0], vec![1.0, 1.0]]);
        assert_eq!(d.targets, vec![0.0, 1.0]);
        let missing = DatasetSpec::new(dir.path().join("nope.csv"), DataFormat::Csv);
        assert_eq!(load(&missing).unwrap_err().exit_code(), 1);
    }
}
