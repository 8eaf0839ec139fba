//! Report artifacts: JSON, the summary table row and the plot series.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use super::experiment::RunReport;
use crate::error::Result;

/// Summary table header.
pub const SUMMARY_HEADER: [&str; 5] = ["dataset", "learner", "MSE", "J|D", "Time"];

/// Output destinations; `None` skips that artifact.
#[derive(Clone, Debug, Default)]
pub struct Sinks {
    pub json: Option<PathBuf>,
    pub summary_csv: Option<PathBuf>,
    pub series_csv: Option<PathBuf>,
}

impl Sinks {
    /// `<stem>.json`, `<stem>.summary.csv` and `<stem>.series.csv`.
    pub fn with_stem(stem: impl Into<PathBuf>) -> Self {
        let stem: PathBuf = stem.into();
        let with = |suffix: &str| {
            let mut s = stem.clone().into_os_string();
            s.push(suffix);
            Some(PathBuf::from(s))
        };
        Sinks {
            json: with(".json"),
            summary_csv: with(".summary.csv"),
            series_csv: with(".series.csv"),
        }
    }
}

pub fn write_json(report: &RunReport, out: impl Write) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    Ok(())
}

/// One header row and, when the report has a summary, one data row.
/// `Time` is the mean total streaming time in seconds; per-round time is in the JSON.
pub fn write_summary_csv(report: &RunReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    if let Some(s) = &report.summary {
        w.write_record([
            report.dataset.clone(),
            report.config.learner.to_string(),
            format!("{:.5}±{:.5}", s.mse.mean, s.mse.std),
            format!("{:.1}", s.buffer_size.mean),
            format!("{:.4}", s.total_time_s.mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_series_csv(report: &RunReport, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["round", "buffer_size", "cumulative_loss"])?;
    for p in report.series.iter().flatten() {
        w.write_record([
            p.round.to_string(),
            p.buffer_size.to_string(),
            p.cumulative_loss.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes every configured artifact. The series file is only written when
/// the report carries a series.
pub fn emit(report: &RunReport, sinks: &Sinks) -> Result<()> {
    if let Some(p) = &sinks.json {
        write_json(report, BufWriter::new(File::create(p)?))?;
    }
    if let Some(p) = &sinks.summary_csv {
        write_summary_csv(report, BufWriter::new(File::create(p)?))?;
    }
    if let (Some(p), Some(_)) = (&sinks.series_csv, &report.series) {
        write_series_csv(report, BufWriter::new(File::create(p)?))?;
    }
    Ok(())
}
