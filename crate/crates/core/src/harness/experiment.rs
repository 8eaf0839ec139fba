//! Multi-permutation experiments with grid tuning.

use std::str::FromStr;
use std::time::Instant;

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::aogd::{default_capacity, AogdConfig, AogdState};
use crate::baselines::{ons_eta, FogdConfig, FogdState, KonsConfig, KonsState, NogdConfig, NogdState, KONS_MAX_ROUNDS};
use crate::error::{Error, Result};
use crate::kernels::{self, Kernel};
use crate::learner::OnlineLearner;
use crate::nons::{InitVariant, NonsConfig, NonsState};
use crate::verify::{self, CheckResult, DENSE_ORACLE_MAX_ROUNDS};

/// Tolerance for the recomputed-MSE audit.
pub const MSE_AUDIT_TOLERANCE: f64 = 1e-12;
const SERIES_MAX_POINTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    AogdAld,
    NonsAld,
    ConKons,
    Kogd,
    Kons,
    Fogd,
    Nogd,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 7] = [
        LearnerKind::AogdAld,
        LearnerKind::NonsAld,
        LearnerKind::ConKons,
        LearnerKind::Kogd,
        LearnerKind::Kons,
        LearnerKind::Fogd,
        LearnerKind::Nogd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::AogdAld => "aogd_ald",
            LearnerKind::NonsAld => "nons_ald",
            LearnerKind::ConKons => "con_kons",
            LearnerKind::Kogd => "kogd",
            LearnerKind::Kons => "kons",
            LearnerKind::Fogd => "fogd",
            LearnerKind::Nogd => "nogd",
        }
    }

    fn tunes_mu(self) -> bool {
        matches!(self, LearnerKind::NonsAld | LearnerKind::ConKons | LearnerKind::Kons)
    }

    fn tunes_eta(self) -> bool {
        matches!(self, LearnerKind::Fogd | LearnerKind::Nogd)
    }

    fn default_radius(self) -> f64 {
        match self {
            LearnerKind::AogdAld | LearnerKind::Kogd => 2.0,
            _ => 1.0,
        }
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::input(format!("unknown learner '{s}'")))
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsToggle {
    pub summary: bool,
    pub per_permutation: bool,
    pub series: bool,
}

impl Default for MetricsToggle {
    fn default() -> Self {
        MetricsToggle {
            summary: true,
            per_permutation: true,
            series: false,
        }
    }
}

impl MetricsToggle {
    pub fn none() -> Self {
        MetricsToggle {
            summary: false,
            per_permutation: false,
            series: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub learner: LearnerKind,
    /// Gaussian bandwidth grid.
    pub bandwidths: Vec<f64>,
    /// `U`; defaults to 2 for AOGD-ALD/KOGD and 1 otherwise.
    pub radius: Option<f64>,
    /// `Y`; targets are rescaled to `[0, 1]`.
    pub target_bound: f64,
    /// Defaults to `25/T`.
    pub alpha: Option<f64>,
    pub mus: Vec<f64>,
    /// `B₀`; defaults to the horizon-based capacity.
    pub capacity: Option<usize>,
    /// FOGD frequency count `D`.
    pub features: usize,
    /// NOGD budget `J`.
    pub budget: usize,
    /// FOGD/NOGD step sizes; defaults to `{1, 10, 100, 1000}/√T`.
    pub etas: Option<Vec<f64>>,
    pub permutations: usize,
    pub seed: u64,
    /// Use only the first `T` rows of each permutation.
    pub max_rounds: Option<usize>,
    pub max_dictionary: Option<usize>,
    pub metrics: MetricsToggle,
    pub verify: bool,
}

impl ExperimentConfig {
    pub fn new(learner: LearnerKind, bandwidth: f64) -> Self {
        ExperimentConfig {
            learner,
            bandwidths: vec![bandwidth],
            radius: None,
            target_bound: 1.0,
            alpha: None,
            mus: vec![1.0, 5.0, 15.0],
            capacity: None,
            features: 400,
            budget: 400,
            etas: None,
            permutations: 10,
            seed: 0,
            max_rounds: None,
            max_dictionary: None,
            metrics: MetricsToggle::default(),
            verify: false,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or_else(|| self.learner.default_radius())
    }

    pub fn alpha_for(&self, horizon: usize) -> f64 {
        self.alpha.unwrap_or(25.0 / horizon as f64)
    }

    pub fn etas_for(&self, horizon: usize) -> Vec<f64> {
        self.etas.clone().unwrap_or_else(|| {
            let s = (horizon as f64).sqrt();
            [1.0, 10.0, 100.0, 1000.0].iter().map(|c| c / s).collect()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidths.is_empty() || self.mus.is_empty() || self.etas.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::input("parameter grids must be nonempty"));
        }
        if self.permutations == 0 {
            return Err(Error::input("need at least one permutation"));
        }
        for &b in &self.bandwidths {
            Kernel::gaussian(b)?;
        }
        if self.mus.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::input("mu values must be positive"));
        }
        if !(self.target_bound > 0.0) || !(self.radius() > 0.0) {
            return Err(Error::input("U and Y must be positive"));
        }
        if self.max_rounds == Some(0) {
            return Err(Error::input("max_rounds must be positive"));
        }
        Ok(())
    }

    /// Seed of permutation `index`.
    pub fn permutation_seed(&self, index: usize) -> u64 {
        self.seed.wrapping_add(index as u64)
    }

    fn grid(&self, horizon: usize) -> Vec<Params> {
        let mus: Vec<Option<f64>> = if self.learner.tunes_mu() {
            self.mus.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let etas: Vec<Option<f64>> = if self.learner.tunes_eta() {
            self.etas_for(horizon).into_iter().map(Some).collect()
        } else {
            vec![None]
        };
        let mut out = Vec::new();
        for &bandwidth in &self.bandwidths {
            for &mu in &mus {
                for &eta in &etas {
                    out.push(Params { bandwidth, mu, eta });
                }
            }
        }
        out
    }
}

/// One point of the tuning grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub bandwidth: f64,
    pub mu: Option<f64>,
    pub eta: Option<f64>,
}

/// Builds a learner for a stream of `horizon` rounds in dimension `d`.
pub fn build_learner(
    cfg: &ExperimentConfig,
    params: &Params,
    d: usize,
    horizon: usize,
    seed: u64,
) -> Result<Box<dyn OnlineLearner>> {
    let kernel = Kernel::gaussian(params.bandwidth)?;
    let u = cfg.radius();
    let y = cfg.target_bound;
    let alpha = cfg.alpha_for(horizon);
    let mu = params.mu.unwrap_or(cfg.mus[0]);
    let eta = params.eta.unwrap_or_else(|| cfg.etas_for(horizon)[0]);
    Ok(match cfg.learner {
        LearnerKind::AogdAld => {
            let cap = match cfg.capacity {
                Some(c) => c,
                None => default_capacity(d, horizon)?,
            };
            Box::new(AogdState::new(AogdConfig::ald(kernel, u, alpha, cap))?)
        }
        LearnerKind::Kogd => Box::new(AogdState::new(AogdConfig::kogd(kernel, u))?),
        LearnerKind::NonsAld | LearnerKind::ConKons => Box::new(NonsState::new(nons_config(cfg, kernel, mu, alpha))?),
        LearnerKind::Kons => Box::new(KonsState::new(KonsConfig::new(kernel, mu, ons_eta(u, y)))?),
        LearnerKind::Fogd => Box::new(FogdState::new(
            FogdConfig {
                bandwidth: params.bandwidth,
                features: cfg.features,
                eta,
                seed,
            },
            d,
        )?),
        LearnerKind::Nogd => Box::new(NogdState::new(NogdConfig {
            kernel,
            budget: cfg.budget,
            eta,
        })?),
    })
}

fn nons_config(cfg: &ExperimentConfig, kernel: Kernel, mu: f64, alpha: f64) -> NonsConfig {
    let mut c = NonsConfig::new(kernel, mu, alpha, cfg.radius(), cfg.target_bound);
    if cfg.learner == LearnerKind::ConKons {
        c.variant = InitVariant::ConKons;
    }
    c.max_dictionary = cfg.max_dictionary;
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub round: usize,
    pub buffer_size: usize,
    pub cumulative_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PermutationReport {
    pub index: usize,
    pub seed: u64,
    pub mse: f64,
    /// MSE over rounds the learner flagged as genuine prediction rounds.
    pub mse_prediction_rounds: f64,
    pub prediction_rounds: usize,
    pub cumulative_loss: f64,
    pub buffer_size: usize,
    pub total_time_s: f64,
    pub time_per_round_s: f64,
    pub memory_bytes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanStd { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mse: MeanStd,
    pub mse_prediction_rounds: MeanStd,
    pub cumulative_loss: MeanStd,
    pub buffer_size: MeanStd,
    pub total_time_s: MeanStd,
    pub time_per_round_s: MeanStd,
    pub peak_memory_bytes: usize,
}

impl Summary {
    fn from_permutations(perms: &[PermutationReport]) -> Self {
        let col = |f: fn(&PermutationReport) -> f64| MeanStd::of(&perms.iter().map(f).collect::<Vec<_>>());
        Summary {
            mse: col(|p| p.mse),
            mse_prediction_rounds: col(|p| p.mse_prediction_rounds),
            cumulative_loss: col(|p| p.cumulative_loss),
            buffer_size: col(|p| p.buffer_size as f64),
            total_time_s: col(|p| p.total_time_s),
            time_per_round_s: col(|p| p.time_per_round_s),
            peak_memory_bytes: perms.iter().map(|p| p.memory_bytes).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub params: Params,
    /// `None` when some permutation diverged.
    pub mse_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub rounds: usize,
    pub dim: usize,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub selected: Option<Params>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub grid: Option<Vec<GridResult>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub summary: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub permutations: Option<Vec<PermutationReport>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub series: Option<Vec<SeriesPoint>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub verification: Option<Vec<CheckResult>>,
}

impl RunReport {
    /// Copy with all wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> RunReport {
        let mut r = self.clone();
        let zero = MeanStd { mean: 0.0, std: 0.0 };
        if let Some(s) = &mut r.summary {
            s.total_time_s = zero;
            s.time_per_round_s = zero;
        }
        if let Some(ps) = &mut r.permutations {
            for p in ps {
                p.total_time_s = 0.0;
                p.time_per_round_s = 0.0;
            }
        }
        r
    }
}

/// Outcome of streaming one permutation through one learner.
#[derive(Clone, Debug)]
pub struct StreamOutcome {
    pub predictions: Vec<f64>,
    pub prediction_round: Vec<bool>,
    pub buffer_sizes: Vec<usize>,
    pub elapsed_s: f64,
    pub memory_bytes: usize,
    /// Set when a squared loss overflowed; the stream stops at that round.
    pub diverged: bool,
}

/// Feeds `data` through `learner`, timing only the `step` calls.
pub fn run_stream(learner: &mut dyn OnlineLearner, data: &Dataset) -> Result<StreamOutcome> {
    let n = data.len();
    let mut out = StreamOutcome {
        predictions: Vec::with_capacity(n),
        prediction_round: Vec::with_capacity(n),
        buffer_sizes: Vec::with_capacity(n),
        elapsed_s: 0.0,
        memory_bytes: 0,
        diverged: false,
    };
    for (x, y) in data.features.iter().zip(&data.targets) {
        let start = Instant::now();
        let r = learner.step(x, *y)?;
        out.elapsed_s += start.elapsed().as_secs_f64();
        if !(r.prediction - y).powi(2).is_finite() {
            out.diverged = true;
            break;
        }
        out.predictions.push(r.prediction);
        out.prediction_round.push(r.is_prediction_round);
        out.buffer_sizes.push(learner.buffer_size());
    }
    out.memory_bytes = learner.memory_estimate();
    Ok(out)
}

fn summarize_stream(index: usize, seed: u64, data: &Dataset, s: &StreamOutcome) -> Result<PermutationReport> {
    let t = data.len();
    let mut cumulative = 0.0;
    let mut pred_sum = 0.0;
    let mut pred_n = 0;
    for ((p, y), is_pred) in s.predictions.iter().zip(&data.targets).zip(&s.prediction_round) {
        let l = (p - y).powi(2);
        cumulative += l;
        if *is_pred {
            pred_sum += l;
            pred_n += 1;
        }
    }
    let mse = cumulative / t as f64;
    let residuals: Vec<f64> = s.predictions.iter().zip(&data.targets).map(|(p, y)| p - y).collect();
    let recomputed = residuals.iter().map(|r| r * r).rev().sum::<f64>() / t as f64;
    if (recomputed - mse).abs() > MSE_AUDIT_TOLERANCE * mse.max(1.0) {
        return Err(Error::numeric(format!("MSE audit failed: {mse} vs {recomputed}")));
    }
    if !mse.is_finite() {
        return Err(Error::numeric("learner produced non-finite predictions"));
    }
    Ok(PermutationReport {
        index,
        seed,
        mse,
        mse_prediction_rounds: if pred_n > 0 { pred_sum / pred_n as f64 } else { f64::NAN },
        prediction_rounds: pred_n,
        cumulative_loss: cumulative,
        buffer_size: *s.buffer_sizes.last().unwrap_or(&0),
        total_time_s: s.elapsed_s,
        time_per_round_s: s.elapsed_s / t as f64,
        memory_bytes: s.memory_bytes,
    })
}

fn series(data: &Dataset, s: &StreamOutcome) -> Vec<SeriesPoint> {
    let t = data.len();
    let every = t.div_ceil(SERIES_MAX_POINTS).max(1);
    let mut out = Vec::new();
    let mut cumulative = 0.0;
    for i in 0..t {
        cumulative += (s.predictions[i] - data.targets[i]).powi(2);
        if (i + 1) % every == 0 || i + 1 == t {
            out.push(SeriesPoint {
                round: i + 1,
                buffer_size: s.buffer_sizes[i],
                cumulative_loss: cumulative,
            });
        }
    }
    out
}

/// Permutation `index` of `data`, truncated to the configured horizon.
pub fn permutation(cfg: &ExperimentConfig, data: &Dataset, index: usize) -> Dataset {
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.permutation_seed(index)));
    let p = data.permuted(&order);
    match cfg.max_rounds {
        Some(t) => p.truncated(t),
        None => p,
    }
}

/// Runs every grid point on every permutation, selects the grid point with the
/// lowest mean MSE and reports on it.
pub fn run_experiment(cfg: &ExperimentConfig, data: &Dataset) -> Result<RunReport> {
    cfg.validate()?;
    data.validate()?;
    let horizon = cfg.max_rounds.map_or(data.len(), |t| t.min(data.len()));
    let d = data.dim();
    if cfg.learner == LearnerKind::Kons && horizon > KONS_MAX_ROUNDS {
        return Err(Error::ResourceCap(format!(
            "KONS is limited to {KONS_MAX_ROUNDS} rounds, stream has {horizon}"
        )));
    }
    let mut report = RunReport {
        dataset: data.name.clone(),
        rounds: horizon,
        dim: d,
        config: cfg.clone(),
        selected: None,
        grid: None,
        summary: None,
        permutations: None,
        series: None,
        verification: None,
    };
    let m = cfg.metrics;
    if !(m.summary || m.per_permutation || m.series) && !cfg.verify {
        return Ok(report);
    }

    let perms: Vec<Dataset> = (0..cfg.permutations).map(|i| permutation(cfg, data, i)).collect();
    let grid = cfg.grid(horizon);
    info!(
        "{} on {}: {} grid points x {} permutations, T = {horizon}",
        cfg.learner,
        data.name,
        grid.len(),
        perms.len()
    );
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..perms.len()).map(move |p| (g, p)))
        .collect();
    type JobOutcome = Option<(PermutationReport, Option<Vec<SeriesPoint>>)>;
    let results: Vec<JobOutcome> = jobs
        .par_iter()
        .map(|&(g, p)| {
            let seed = cfg.permutation_seed(p);
            let run = || -> Result<_> {
                let mut learner = build_learner(cfg, &grid[g], d, horizon, seed)?;
                let out = run_stream(learner.as_mut(), &perms[p])?;
                if out.diverged {
                    return Ok(None);
                }
                let rep = summarize_stream(p, seed, &perms[p], &out)?;
                let ser = (m.series && p == 0).then(|| series(&perms[p], &out));
                Ok(Some((rep, ser)))
            };
            run().map_err(|e| Error::Permutation {
                index: p,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let np = perms.len();
    let grid_results: Vec<GridResult> = grid
        .iter()
        .enumerate()
        .map(|(g, params)| GridResult {
            params: *params,
            mse_mean: results[g * np..(g + 1) * np]
                .iter()
                .map(|r| r.as_ref().map(|r| r.0.mse))
                .sum::<Option<f64>>()
                .map(|s| s / np as f64),
        })
        .collect();
    let best = grid_results
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.mse_mean.map(|m| (i, m)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::numeric("every grid point diverged"))?;
    let chosen: Vec<_> = results[best * np..(best + 1) * np].iter().flatten().collect();
    let perm_reports: Vec<PermutationReport> = chosen.iter().map(|r| r.0.clone()).collect();

    report.selected = Some(grid[best]);
    if m.summary {
        report.summary = Some(Summary::from_permutations(&perm_reports));
        report.grid = Some(grid_results);
    }
    if m.per_permutation {
        report.permutations = Some(perm_reports);
    }
    if m.series {
        report.series = chosen[0].1.clone();
    }
    if cfg.verify {
        report.verification = Some(verification_checks(cfg, &grid[best], &perms[0], horizon)?);
    }
    Ok(report)
}

/// Oracle checks on the first permutation, run separately from the timed runs.
fn verification_checks(
    cfg: &ExperimentConfig,
    params: &Params,
    data: &Dataset,
    horizon: usize,
) -> Result<Vec<CheckResult>> {
    let kernel = Kernel::gaussian(params.bandwidth)?;
    let alpha = cfg.alpha_for(horizon);
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail,
        })
    };
    match cfg.learner {
        LearnerKind::NonsAld | LearnerKind::ConKons => {
            let mu = params.mu.unwrap_or(cfg.mus[0]);
            let mut c = nons_config(cfg, kernel, mu, alpha);
            c.verify = true;
            let mut s = NonsState::new(c)?;
            for (x, y) in data.features.iter().zip(&data.targets) {
                s.step(x, *y)?;
            }
            let log = s.replay_log().expect("verification mode keeps a log");
            let (mut q, mut det, mut replay, mut pres, mut drift) = (0f64, 0f64, 0f64, 0f64, 0f64);
            for tr in s.transitions() {
                q = q.max(tr.q_defect);
                det = det.max((tr.log_det_new - tr.log_det_prev - (tr.new_size - tr.old_size) as f64 * mu.ln()).abs());
                let r = verify::replay_a(log, &tr.map, mu)?;
                replay = replay.max(crate::numerics::relative_frobenius(tr.a_new.as_matrix(), r.as_matrix()));
                pres = pres.max((tr.prediction_new - tr.prediction_old).abs());
                drift = drift.max(tr.inverse_drift);
            }
            push("transition operator orthonormality", q <= 1e-8, format!("{q:.2e}"));
            push("determinant ratio", det <= 1e-6, format!("{det:.2e}"));
            push("covariance replay", replay <= 1e-8, format!("{replay:.2e}"));
            if cfg.learner == LearnerKind::NonsAld {
                push("prediction preservation", pres <= 1e-8, format!("{pres:.2e}"));
            }
            push("Sherman-Morrison drift", drift <= 1e-6, format!("{drift:.2e}"));
            if data.len() <= DENSE_ORACLE_MAX_ROUNDS {
                if let Some(map) = s.feature_map() {
                    let gram = kernels::gram(&kernel, &data.features)?;
                    let (lhs, bound) = verify::global_spectral_check(log, map, &gram, alpha)?;
                    push(
                        "global spectral bound",
                        lhs <= bound,
                        format!("{lhs:.3e} <= {bound:.3e}"),
                    );
                }
            }
        }
        LearnerKind::AogdAld | LearnerKind::Kogd => {
            let cap = match (cfg.learner, cfg.capacity) {
                (LearnerKind::Kogd, _) => 1,
                (_, Some(c)) => c,
                _ => default_capacity(data.dim(), horizon)?,
            };
            let mut ac = AogdConfig::ald(kernel, cfg.radius(), alpha, cap);
            if cfg.learner == LearnerKind::Kogd {
                ac = AogdConfig::kogd(kernel, cfg.radius());
            }
            let mut s = AogdState::new(ac)?;
            let mut worst: f64 = 0.0;
            let mut max_norm: f64 = 0.0;
            for (x, y) in data.features.iter().zip(&data.targets).take(DENSE_ORACLE_MAX_ROUNDS) {
                s.step(x, *y)?;
                let exact = s.exact_norm_sq();
                worst = worst.max((exact - s.norm_sq()).abs() / exact.max(1e-12));
                max_norm = max_norm.max(exact.sqrt());
            }
            push("RKHS norm cache", worst <= 1e-6, format!("relative drift {worst:.2e}"));
            push(
                "norm ball",
                max_norm <= cfg.radius() * (1.0 + 1e-9),
                format!("max norm {max_norm:.4}"),
            );
        }
        _ => push("oracle checks", true, "no oracle for this learner".into()),
    }
    Ok(checks)
}
