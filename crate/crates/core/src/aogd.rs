//! Approximate online gradient descent with ALD-compressed gradients, and
//! the exact kernel OGD it reduces to.
//!
//! The hypothesis is kept as a kernel expansion `f = Σ a_τ κ(x_τ, ·)`. Each
//! round the square-loss gradient `g κ(x_t, ·)` is either replaced by its
//! projection `g Φ_S β*` onto the dictionary span (when the dictionary still
//! has room and the ALD test holds) or used exactly, which appends a new
//! coefficient. The step size is `η_t = U / √(1 + Σ_τ ‖∇̂_τ‖²)` and the result
//! is radially projected onto the ball of radius `U`.

use serde::{Deserialize, Serialize};

use crate::dictionary::Dictionary;
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::learner::{self, OnlineLearner, RoundOutcome};
use crate::numerics::Vector;

/// Relative disagreement between the cached and recomputed `‖f‖²` that is
/// treated as a bug rather than rounding.
pub const NORM_AUDIT_TOLERANCE: f64 = 1e-4;
const NORM_AUDIT_MIN_INTERVAL: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AogdMode {
    Ald,
    ExactKogd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AogdConfig {
    pub kernel: Kernel,
    /// Norm-ball radius `U`.
    pub radius: f64,
    pub alpha: f64,
    /// Dictionary capacity `B₀`.
    pub capacity: usize,
    pub mode: AogdMode,
}

impl AogdConfig {
    pub fn ald(kernel: Kernel, radius: f64, alpha: f64, capacity: usize) -> Self {
        AogdConfig {
            kernel,
            radius,
            alpha,
            capacity,
            mode: AogdMode::Ald,
        }
    }

    pub fn kogd(kernel: Kernel, radius: f64) -> Self {
        AogdConfig {
            kernel,
            radius,
            alpha: 0.0,
            capacity: 1,
            mode: AogdMode::ExactKogd,
        }
    }

    /// `B₀ = default_capacity(d, T)` and `α = 1/T`.
    pub fn with_horizon(kernel: Kernel, radius: f64, d: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::input("horizon must be positive"));
        }
        Ok(Self::ald(
            kernel,
            radius,
            1.0 / horizon as f64,
            default_capacity(d, horizon)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::input(format!("radius U must be positive, got {}", self.radius)));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::input(format!(
                "alpha must be finite and non-negative, got {}",
                self.alpha
            )));
        }
        if self.capacity == 0 {
            return Err(Error::input("capacity B0 must be at least 1"));
        }
        Ok(())
    }
}

/// `⌊(√(d² + 4dT) − d)/2⌋`, floored at 1.
pub fn default_capacity(d: usize, horizon: usize) -> Result<usize> {
    if d == 0 || horizon == 0 {
        return Err(Error::input("dimension and horizon must be positive"));
    }
    let overflow = || Error::input(format!("capacity formula overflows for d = {d}, T = {horizon}"));
    let (d, t) = (d as u128, horizon as u128);
    let disc = d
        .checked_mul(d)
        .and_then(|dd| d.checked_mul(t)?.checked_mul(4)?.checked_add(dd))
        .ok_or_else(overflow)?;
    let b = (disc.isqrt() - d) / 2;
    usize::try_from(b).map(|b| b.max(1)).map_err(|_| overflow())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AogdBranch {
    /// Gradient replaced by its dictionary projection.
    Ald,
    /// Exact gradient; one coefficient appended.
    Exact,
}

/// Per-round record, streamable as JSON lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AogdTrace {
    pub round: usize,
    pub prediction: f64,
    pub target: f64,
    pub branch: AogdBranch,
    /// ALD projection error; absent when the test was not run.
    pub ald_error: Option<f64>,
    pub eta: f64,
    pub buffer_size: usize,
}

#[derive(Clone, Debug)]
pub struct AogdState {
    config: AogdConfig,
    dim: Option<usize>,
    dict: Dictionary,
    coeffs: Vec<f64>,
    dict_evals: Vec<f64>,
    extra_atoms: Vec<Vec<f64>>,
    extra_coeffs: Vec<f64>,
    grad_norm_acc: f64,
    hyp_norm_sq: f64,
    round: usize,
    next_audit: usize,
}

impl AogdState {
    pub fn new(config: AogdConfig) -> Result<Self> {
        config.validate()?;
        let dict = Dictionary::new(config.kernel, config.alpha)?.with_capacity(config.capacity)?;
        Ok(AogdState {
            config,
            dim: None,
            dict,
            coeffs: Vec::new(),
            dict_evals: Vec::new(),
            extra_atoms: Vec::new(),
            extra_coeffs: Vec::new(),
            grad_norm_acc: 0.0,
            hyp_norm_sq: 0.0,
            round: 0,
            next_audit: NORM_AUDIT_MIN_INTERVAL,
        })
    }

    pub fn config(&self) -> &AogdConfig {
        &self.config
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    /// Number of stored atoms (dictionary plus atoms appended after it filled).
    pub fn buffer_len(&self) -> usize {
        self.coeffs.len() + self.extra_coeffs.len()
    }

    /// All atoms in coefficient order.
    pub fn atoms(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.dict.atoms().iter().chain(&self.extra_atoms)
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.coeffs.iter().chain(&self.extra_coeffs).copied().collect()
    }

    pub fn grad_norm_acc(&self) -> f64 {
        self.grad_norm_acc
    }

    /// Cached `‖f_t‖²_H`.
    pub fn norm_sq(&self) -> f64 {
        self.hyp_norm_sq
    }

    /// `η` the next nonzero-gradient round would use, before its own gradient is added.
    pub fn current_eta(&self) -> f64 {
        self.config.radius / (1.0 + self.grad_norm_acc).sqrt()
    }

    /// `f_t(x)`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim {
            crate::numerics::check_len(d, x.len())?;
        }
        Ok(self.predict_with_cross(x, &self.dict.cross(x)?))
    }

    fn predict_with_cross(&self, x: &[f64], cross: &Vector) -> f64 {
        let k = &self.config.kernel;
        let head: f64 = self.coeffs.iter().zip(cross.iter()).map(|(a, c)| a * c).sum();
        let tail: f64 = self
            .extra_atoms
            .iter()
            .zip(&self.extra_coeffs)
            .map(|(p, a)| a * k.eval_unchecked(p, x))
            .sum();
        head + tail
    }

    /// `coeffsᵀ K coeffs` from scratch.
    pub fn exact_norm_sq(&self) -> f64 {
        let k = &self.config.kernel;
        let atoms: Vec<&Vec<f64>> = self.atoms().collect();
        let a = self.coefficients();
        let mut total = 0.0;
        for i in 0..atoms.len() {
            total += a[i] * a[i] * k.self_similarity(atoms[i]);
            for j in 0..i {
                total += 2.0 * a[i] * a[j] * k.eval_unchecked(atoms[i], atoms[j]);
            }
        }
        total
    }

    /// One round: predict `x`, observe `y`, update.
    pub fn step(&mut self, x: &[f64], y: f64) -> Result<AogdTrace> {
        learner::check_round_input(x, y)?;
        learner::check_dim(&mut self.dim, x)?;
        self.round += 1;

        let cross = self.dict.cross(x)?;
        let prediction = self.predict_with_cross(x, &cross);
        let g = 2.0 * (prediction - y);

        let ald = if self.config.mode == AogdMode::Ald && !self.dict.is_full() {
            Some(self.dict.ald_test_with_cross(x, cross.clone())?)
        } else {
            None
        };
        let branch = match &ald {
            Some(res) if res.holds => AogdBranch::Ald,
            _ => AogdBranch::Exact,
        };
        let mut trace = AogdTrace {
            round: self.round,
            prediction,
            target: y,
            branch,
            ald_error: ald.as_ref().map(|r| r.error),
            eta: self.current_eta(),
            buffer_size: self.buffer_len(),
        };
        if g == 0.0 {
            return Ok(trace);
        }

        let norm_bar = match (branch, ald) {
            (AogdBranch::Ald, Some(res)) => {
                let kb = self.dict.gram().mul_vec(&res.beta);
                let grad_sq = g * g * res.beta.dot(&kb);
                self.grad_norm_acc += grad_sq;
                let eta = self.current_eta();
                trace.eta = eta;
                let inner: f64 = res.beta.iter().zip(&self.dict_evals).map(|(b, e)| b * e).sum();
                for (i, a) in self.coeffs.iter_mut().enumerate() {
                    *a -= eta * g * res.beta[i];
                }
                for (i, e) in self.dict_evals.iter_mut().enumerate() {
                    *e -= eta * g * kb[i];
                }
                self.hyp_norm_sq - 2.0 * eta * g * inner + eta * eta * grad_sq
            }
            (_, ald) => {
                let kxx = self.config.kernel.self_similarity(x);
                let grad_sq = g * g * kxx;
                self.grad_norm_acc += grad_sq;
                let eta = self.current_eta();
                trace.eta = eta;
                for (i, e) in self.dict_evals.iter_mut().enumerate() {
                    *e -= eta * g * cross[i];
                }
                match ald {
                    Some(res) => {
                        self.dict.add_atom(x, y, &res)?;
                        self.coeffs.push(-eta * g);
                        self.dict_evals.push(prediction - eta * g * kxx);
                    }
                    None => {
                        self.extra_atoms.push(x.to_vec());
                        self.extra_coeffs.push(-eta * g);
                    }
                }
                self.hyp_norm_sq - 2.0 * eta * g * prediction + eta * eta * grad_sq
            }
        };

        self.hyp_norm_sq = norm_bar.max(0.0);
        self.project();

        let buffer = self.buffer_len();
        if self.round >= self.next_audit {
            self.audit_norm()?;
            self.next_audit = self.round + buffer.max(NORM_AUDIT_MIN_INTERVAL);
        }
        trace.buffer_size = buffer;
        Ok(trace)
    }

    fn project(&mut self) {
        let u = self.config.radius;
        let norm = self.hyp_norm_sq.sqrt();
        if norm > u {
            let s = u / norm;
            for a in self
                .coeffs
                .iter_mut()
                .chain(&mut self.extra_coeffs)
                .chain(&mut self.dict_evals)
            {
                *a *= s;
            }
            self.hyp_norm_sq *= s * s;
        }
    }

    /// Recomputes `‖f‖²` exactly, failing if the cached value drifted.
    pub fn audit_norm(&mut self) -> Result<()> {
        let exact = self.exact_norm_sq();
        let cached = self.hyp_norm_sq;
        if (exact - cached).abs() > NORM_AUDIT_TOLERANCE * exact.max(cached) + 1e-10 {
            return Err(Error::numeric(format!(
                "cached RKHS norm {cached:e} disagrees with recomputed {exact:e} at round {}",
                self.round
            )));
        }
        self.hyp_norm_sq = exact.max(0.0);
        self.project();
        Ok(())
    }
}

impl OnlineLearner for AogdState {
    fn step(&mut self, x: &[f64], y: f64) -> Result<RoundOutcome> {
        AogdState::step(self, x, y).map(|t| RoundOutcome::predicted(t.prediction))
    }

    fn buffer_size(&self) -> usize {
        self.buffer_len()
    }

    fn memory_estimate(&self) -> usize {
        let d = self.dim.unwrap_or(0);
        let j = self.dict.len();
        let n = self.buffer_len();
        8 * (n * (d + 1) + 2 * j * j + j * (d + 2))
    }
}
