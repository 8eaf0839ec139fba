//! Online Newton step over a growing Nyström feature space.
//!
//! Rounds where the ALD test fails add an atom and emit a prediction from the
//! previous epoch's model. The first ALD-holding round afterwards rebuilds the
//! feature map, carries `(w, A)` into the new coordinates through the
//! transition operator `Q`, and resumes ordinary ONS updates:
//!
//! ```text
//! A ← A + η g² φφᵀ,   w̃ ← w − A⁻¹ g φ,   w ← argmin_{|wᵀφ(x')| ≤ U} ‖w − w̃‖²_A
//! ```
//!
//! The projection needs the next instance `x'`, so `w̃` is kept pending until
//! the next round that consumes it.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, FeatureMap};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::learner::{self, OnlineLearner, RoundOutcome};
use crate::numerics::{self, Matrix, SymMatrix, Vector};
use crate::verify::{ReplayEntry, ReplayLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitVariant {
    /// Carry over the projected weight at the new epoch's first instance.
    NonsAld,
    /// Carry over the weight used at the previous prediction round.
    ConKons,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsConfig {
    pub kernel: Kernel,
    pub mu: f64,
    pub alpha: f64,
    /// Slab half-width `U`.
    pub radius: f64,
    /// Target bound `Y`.
    pub target_bound: f64,
    /// Overrides `1/(4(U² + Y²))`.
    pub eta: Option<f64>,
    pub variant: InitVariant,
    /// Abort with a resource error once the dictionary would exceed this size.
    pub max_dictionary: Option<usize>,
    /// Keep the replay log and per-transition records.
    pub verify: bool,
}

impl NonsConfig {
    pub fn new(kernel: Kernel, mu: f64, alpha: f64, radius: f64, target_bound: f64) -> Self {
        NonsConfig {
            kernel,
            mu,
            alpha,
            radius,
            target_bound,
            eta: None,
            variant: InitVariant::NonsAld,
            max_dictionary: None,
            verify: false,
        }
    }

    pub fn con_kons(mut self) -> Self {
        self.variant = InitVariant::ConKons;
        self
    }

    pub fn verified(mut self) -> Self {
        self.verify = true;
        self
    }

    pub fn eta(&self) -> f64 {
        self.eta
            .unwrap_or(1.0 / (4.0 * (self.radius * self.radius + self.target_bound * self.target_bound)))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("U", self.radius),
            ("Y", self.target_bound),
            ("eta", self.eta()),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::input(format!(
                "alpha must be finite and non-negative, got {}",
                self.alpha
            )));
        }
        if self.radius < self.target_bound {
            warn!("U = {} is below Y = {}", self.radius, self.target_bound);
        }
        if self.max_dictionary == Some(0) {
            return Err(Error::input("max_dictionary must be at least 1"));
        }
        Ok(())
    }
}

/// `μI + Q(A_prev − μI)Qᵀ`.
///
/// Both variants use this form. The literal `Q A_prev Qᵀ` is rank deficient
/// whenever the dictionary grew, so the complement of `Q`'s range is filled
/// with `μ` as in the regularizer.
pub fn epoch_init_a(a_prev: &SymMatrix, q: &Matrix, mu: f64) -> Result<SymMatrix> {
    numerics::check_len(a_prev.dim(), q.ncols())?;
    if q.nrows() < q.ncols() {
        return Err(Error::input("transition operator must not shrink the feature space"));
    }
    let j = q.nrows();
    let shifted = SymMatrix::symmetrize(a_prev.as_matrix() - Matrix::identity(a_prev.dim(), a_prev.dim()) * mu)?;
    let carried = shifted.congruence(q)?;
    SymMatrix::symmetrize(carried.into_inner() + Matrix::identity(j, j) * mu)
}

/// `Q w_prev`.
pub fn epoch_init_w(w_prev: &Vector, q: &Matrix) -> Result<Vector> {
    numerics::check_len(q.ncols(), w_prev.len())?;
    Ok(q * w_prev)
}

/// Projection of `w̃` onto `{w : |wᵀφ| ≤ U}` in the `A`-norm:
/// `w = w̃ − m(ỹ) A⁻¹φ / (φᵀA⁻¹φ)` with `m(ỹ) = sign(ỹ) max(|ỹ| − U, 0)`.
pub fn project_w(w_tilde: &Vector, a_inv: &SymMatrix, phi: &Vector, radius: f64) -> Result<Vector> {
    numerics::check_len(w_tilde.len(), phi.len())?;
    numerics::check_len(a_inv.dim(), phi.len())?;
    let y = w_tilde.dot(phi);
    let excess = y.abs() - radius;
    if excess <= 0.0 {
        return Ok(w_tilde.clone());
    }
    let v = a_inv.mul_vec(phi);
    let denom = phi.dot(&v);
    if !(denom > 0.0) {
        return Err(Error::numeric("projection direction has zero A-norm"));
    }
    Ok(w_tilde - v * (y.signum() * excess / denom))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonsBranch {
    Expanded,
    Predicted,
}

/// Per-round record, streamable as JSON lines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonsTrace {
    pub round: usize,
    /// Size of the active feature map (0 before the first epoch).
    pub epoch: usize,
    pub branch: NonsBranch,
    pub ald_error: f64,
    pub prediction: f64,
    pub target: f64,
    pub buffer_size: usize,
}

/// What happened at one epoch transition; kept in verification mode.
#[derive(Clone, Debug)]
pub struct TransitionRecord {
    pub round: usize,
    pub old_size: usize,
    pub new_size: usize,
    pub a_prev: SymMatrix,
    pub a_new: SymMatrix,
    pub q: Matrix,
    pub map: FeatureMap,
    /// `log det A_prev`; zero for the first epoch.
    pub log_det_prev: f64,
    pub log_det_new: f64,
    pub q_defect: f64,
    /// `w_prevᵀ φ_old(x_{s_j})`.
    pub prediction_old: f64,
    /// `w_newᵀ φ_new(x_{s_j})`.
    pub prediction_new: f64,
    /// `‖A_inv − inverse(A)‖_F / ‖inverse(A)‖_F` for the epoch that just ended.
    pub inverse_drift: f64,
}

#[derive(Clone, Debug)]
pub struct NonsState {
    config: NonsConfig,
    eta: f64,
    dim: Option<usize>,
    dict: Dictionary,
    fmap: Option<FeatureMap>,
    w: Vector,
    a: SymMatrix,
    a_inv: SymMatrix,
    pending: Option<Vector>,
    flag: bool,
    epoch_start: usize,
    round: usize,
    replay: Option<ReplayLog>,
    transitions: Vec<TransitionRecord>,
}

impl NonsState {
    pub fn new(config: NonsConfig) -> Result<Self> {
        config.validate()?;
        let mut dict = Dictionary::new(config.kernel, config.alpha)?;
        if let Some(cap) = config.max_dictionary {
            dict = dict.with_capacity(cap)?;
        }
        Ok(NonsState {
            eta: config.eta(),
            replay: config.verify.then(ReplayLog::default),
            config,
            dim: None,
            dict,
            fmap: None,
            w: Vector::zeros(0),
            a: SymMatrix::identity(0),
            a_inv: SymMatrix::identity(0),
            pending: None,
            flag: false,
            epoch_start: 0,
            round: 0,
            transitions: Vec::new(),
        })
    }

    pub fn config(&self) -> &NonsConfig {
        &self.config
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dict
    }

    pub fn feature_map(&self) -> Option<&FeatureMap> {
        self.fmap.as_ref()
    }

    /// Size of the active feature map.
    pub fn epoch(&self) -> usize {
        self.fmap.as_ref().map_or(0, FeatureMap::size)
    }

    /// Round at which the active epoch started.
    pub fn epoch_start(&self) -> usize {
        self.epoch_start
    }

    /// Weight used at the most recent prediction round.
    pub fn weights(&self) -> &Vector {
        &self.w
    }

    pub fn pending_weights(&self) -> Option<&Vector> {
        self.pending.as_ref()
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.a
    }

    pub fn covariance_inv(&self) -> &SymMatrix {
        &self.a_inv
    }

    /// Atoms were added since the last prediction round.
    pub fn expansion_pending(&self) -> bool {
        self.flag
    }

    pub fn replay_log(&self) -> Option<&ReplayLog> {
        self.replay.as_ref()
    }

    pub fn transitions(&self) -> &[TransitionRecord] {
        &self.transitions
    }

    pub fn step(&mut self, x: &[f64], y: f64) -> Result<NonsTrace> {
        learner::check_round_input(x, y)?;
        learner::check_dim(&mut self.dim, x)?;
        self.round += 1;
        let res = self.dict.ald_test(x)?;

        // An empty dictionary has no span to project onto, whatever α is.
        if !res.holds || self.dict.is_empty() {
            let prediction = self.stale_prediction(&res.cross)?;
            let atom = self.dict.len();
            self.dict.add_atom(x, y, &res)?;
            self.flag = true;
            if let Some(log) = &mut self.replay {
                log.push(ReplayEntry::Expansion {
                    round: self.round,
                    atom,
                });
            }
            return Ok(NonsTrace {
                round: self.round,
                epoch: self.epoch(),
                branch: NonsBranch::Expanded,
                ald_error: res.error,
                prediction,
                target: y,
                buffer_size: self.dict.len(),
            });
        }

        if self.flag {
            self.begin_epoch(&res.cross)?;
        }

        let fmap = self.fmap.as_ref().expect("a dictionary atom implies an active map");
        let phi = fmap.apply_cross(&res.cross)?;
        if let Some(w_tilde) = self.pending.take() {
            self.w = project_w(&w_tilde, &self.a_inv, &phi, self.config.radius)?;
        }
        let prediction = self.w.dot(&phi);
        let g = 2.0 * (prediction - y);
        let c = self.eta * g * g;
        if c > 0.0 {
            self.a = self.a.add_rank_one(c, &phi)?;
            self.a_inv = numerics::rank_one_inverse_update(&self.a_inv, &phi, c)?;
        }
        self.pending = Some(&self.w - self.a_inv.mul_vec(&phi) * g);
        if let Some(log) = &mut self.replay {
            log.push(ReplayEntry::Prediction {
                round: self.round,
                epoch: phi.len(),
                beta: res.beta.iter().copied().collect(),
                g,
                eta: self.eta,
            });
        }

        Ok(NonsTrace {
            round: self.round,
            epoch: self.epoch(),
            branch: NonsBranch::Predicted,
            ald_error: res.error,
            prediction,
            target: y,
            buffer_size: self.dict.len(),
        })
    }

    /// `clip(w̃ᵀ φ_old(x), ±U)`: what the old model predicts once its pending
    /// projection is applied at `x`. Leaves the state untouched.
    fn stale_prediction(&self, cross: &Vector) -> Result<f64> {
        let Some(fmap) = &self.fmap else {
            return Ok(0.0);
        };
        let phi = fmap.apply_cross(cross)?;
        let w = self.pending.as_ref().unwrap_or(&self.w);
        let u = self.config.radius;
        Ok(w.dot(&phi).clamp(-u, u))
    }

    fn begin_epoch(&mut self, cross: &Vector) -> Result<()> {
        let new_map = self.dict.feature_map()?;
        let old_map = self.fmap.take();
        let q = new_map.transition_from(old_map.as_ref())?;
        let phi_new = new_map.apply_cross(cross)?;
        let mu = self.config.mu;

        let (w_prev, phi_old) = match &old_map {
            Some(old) => {
                let phi_old = old.apply_cross(cross)?;
                let w_prev = match (self.config.variant, self.pending.take()) {
                    (InitVariant::NonsAld, Some(w_tilde)) => {
                        project_w(&w_tilde, &self.a_inv, &phi_old, self.config.radius)?
                    }
                    _ => self.w.clone(),
                };
                (w_prev, phi_old)
            }
            None => (Vector::zeros(0), Vector::zeros(0)),
        };

        let a_new = epoch_init_a(&self.a, &q, mu)?;
        let w_new = epoch_init_w(&w_prev, &q)?;
        let a_inv_new = numerics::inverse_spd(&a_new)?;

        if self.config.verify {
            let inverse_drift = if self.a.dim() == 0 {
                0.0
            } else {
                let fresh = numerics::inverse_spd(&self.a)?;
                numerics::relative_frobenius(self.a_inv.as_matrix(), fresh.as_matrix())
            };
            let log_det_prev = if self.a.dim() == 0 {
                0.0
            } else {
                numerics::log_det_spd(&self.a)?
            };
            self.transitions.push(TransitionRecord {
                round: self.round,
                old_size: q.ncols(),
                new_size: q.nrows(),
                a_prev: self.a.clone(),
                a_new: a_new.clone(),
                q_defect: numerics::orthonormality_defect(&q),
                q: q.clone(),
                map: new_map.clone(),
                log_det_prev,
                log_det_new: numerics::log_det_spd(&a_new)?,
                prediction_old: w_prev.dot(&phi_old),
                prediction_new: w_new.dot(&phi_new),
                inverse_drift,
            });
        }

        debug!(
            "epoch transition at round {}: {} -> {} atoms",
            self.round,
            q.ncols(),
            q.nrows()
        );
        self.fmap = Some(new_map);
        self.a = a_new;
        self.a_inv = a_inv_new;
        self.w = w_new;
        self.pending = None;
        self.flag = false;
        self.epoch_start = self.round;
        Ok(())
    }
}

impl OnlineLearner for NonsState {
    fn step(&mut self, x: &[f64], y: f64) -> Result<RoundOutcome> {
        NonsState::step(self, x, y).map(|t| RoundOutcome {
            prediction: t.prediction,
            is_prediction_round: t.branch == NonsBranch::Predicted,
        })
    }

    fn buffer_size(&self) -> usize {
        self.dict.len()
    }

    fn memory_estimate(&self) -> usize {
        let j = self.dict.len();
        8 * (j * (self.dim.unwrap_or(0) + 1) + 6 * j * j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testing::*;
    use rand::Rng;

    fn gaussian(bw: f64) -> Kernel {
        Kernel::gaussian(bw).unwrap()
    }

    fn stream(seed: u64, n: usize, d: usize) -> Vec<(Vec<f64>, f64)> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
                let y = 0.5 + 0.4 * (2.0 * x[0]).sin() * x[d - 1].cos() + 0.05 * r.random_range(-1.0..1.0);
                (x, y)
            })
            .collect()
    }

    #[test]
    fn project_w_examples() {
        let a_inv = SymMatrix::identity(2);
        let phi = Vector::from_vec(vec![1.0, 0.0]);
        let w = Vector::from_vec(vec![0.5, 3.0]);
        assert_eq!(project_w(&w, &a_inv, &phi, 1.0).unwrap(), w);
        let w = Vector::from_vec(vec![1.5, 3.0]);
        let p = project_w(&w, &a_inv, &phi, 1.0).unwrap();
        assert_eq!(p.dot(&phi), 1.0);
        let w = Vector::from_vec(vec![-2.5, 0.0]);
        assert_eq!(project_w(&w, &a_inv, &phi, 1.0).unwrap().dot(&phi), -1.0);
        let zero = Vector::zeros(2);
        assert_eq!(project_w(&w, &a_inv, &zero, 1.0).unwrap(), w);
    }

    #[test]
    fn project_w_hits_the_boundary_with_random_metrics() {
        let mut r = rng(51);
        for _ in 0..200 {
            let n = r.random_range(1..8);
            let a = random_spd(&mut r, n, 0.5);
            let a_inv = numerics::inverse_spd(&a).unwrap();
            let phi = random_vector(&mut r, n);
            let w = random_vector(&mut r, n) * 3.0;
            let u = r.random_range(0.1..2.0);
            let p = project_w(&w, &a_inv, &phi, u).unwrap();
            let y = w.dot(&phi);
            assert!((p.dot(&phi) - y.clamp(-u, u)).abs() < 1e-10);
        }
    }

    #[test]
    fn epoch_init_examples() {
        let mut r = rng(52);
        let mu = 5.0;
        let a = SymMatrix::scaled_identity(3, mu);
        let q = Matrix::from_columns(&[
            Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
            Vector::from_vec(vec![0.0, 1.0, 0.0, 0.0]),
            Vector::from_vec(vec![0.0, 0.0, 0.0, 1.0]),
        ]);
        let out = epoch_init_a(&a, &q, mu).unwrap();
        assert!((out.as_matrix() - Matrix::identity(4, 4) * mu).norm() < 1e-14);

        let prev = random_spd(&mut r, 3, mu);
        let out = epoch_init_a(&prev, &q, mu).unwrap();
        let ratio = numerics::log_det_spd(&out).unwrap() - numerics::log_det_spd(&prev).unwrap();
        assert!((ratio - mu.ln()).abs() < 1e-10);

        let w = Vector::zeros(3);
        assert_eq!(epoch_init_w(&w, &q).unwrap(), Vector::zeros(4));
        let w = random_vector(&mut r, 3);
        let lifted = epoch_init_w(&w, &q).unwrap();
        assert!((lifted.norm() - w.norm()).abs() < 1e-14);
        assert!((q.transpose() * lifted - w).norm() < 1e-14);

        assert!(epoch_init_a(&SymMatrix::identity(2), &q, mu).is_err());
        assert!(epoch_init_w(&Vector::zeros(2), &q).is_err());
    }

    #[test]
    fn first_round_expands_and_predicts_zero() {
        let mut s = NonsState::new(NonsConfig::new(gaussian(1.0), 1.0, 0.1, 1.0, 1.0)).unwrap();
        let t = s.step(&[0.2, 0.3], 0.7).unwrap();
        assert_eq!(t.branch, NonsBranch::Expanded);
        assert_eq!(t.prediction, 0.0);
        assert_eq!(t.ald_error, 1.0);
        assert!(s.expansion_pending());
    }

    #[test]
    fn first_predicted_round_hand_trace() {
        let mu = 2.0;
        let cfg = NonsConfig::new(gaussian(1.0), mu, 0.5, 1.0, 1.0);
        let eta = cfg.eta();
        assert_eq!(eta, 1.0 / 8.0);
        let mut s = NonsState::new(cfg).unwrap();
        s.step(&[0.0], 0.3).unwrap();
        let x = [0.1];
        let y = 0.6;
        let t = s.step(&x, y).unwrap();
        assert_eq!(t.branch, NonsBranch::Predicted);
        assert_eq!(t.prediction, 0.0);
        let k = gaussian(1.0).eval(&[0.0], &x).unwrap();
        let g = -2.0 * y;
        let expected = mu + eta * g * g * k * k;
        assert!((s.covariance().get(0, 0) - expected).abs() < 1e-12);
        assert!((s.covariance_inv().get(0, 0) - 1.0 / expected).abs() < 1e-12);
        // φ = ±k depending on the eigenvector sign; w̃ = -g φ / A
        let phi = s.feature_map().unwrap().apply(&x).unwrap()[0];
        assert!((phi.abs() - k).abs() < 1e-12);
        assert!((s.pending_weights().unwrap()[0] + g * phi / expected).abs() < 1e-12);
    }

    #[test]
    fn every_point_distinct_with_tiny_alpha_expands_every_round() {
        let mut s = NonsState::new(NonsConfig::new(gaussian(0.3), 1.0, 1e-12, 1.0, 1.0)).unwrap();
        let data = stream(53, 40, 3);
        for (x, y) in &data {
            assert_eq!(s.step(x, *y).unwrap().branch, NonsBranch::Expanded);
        }
        assert_eq!(s.dictionary().len(), 40);
        let fm = s.dictionary().clone().feature_map().unwrap();
        assert!(
            fm.spectral_error_certificate(&data.iter().map(|d| d.0.clone()).collect::<Vec<_>>())
                .unwrap()
                < 1e-8
        );
    }

    #[test]
    fn invariants_over_a_run() {
        let mu = 1.0;
        let u = 1.0;
        let cfg = NonsConfig::new(gaussian(0.7), mu, 0.02, u, 1.0).verified();
        let mut s = NonsState::new(cfg).unwrap();
        let data = stream(54, 400, 2);
        let mut rounds = 0;
        for (i, (x, y)) in data.iter().enumerate() {
            let t = s.step(x, *y).unwrap();
            assert_eq!(t.round, i + 1);
            if t.branch == NonsBranch::Predicted {
                rounds += 1;
                assert!(t.prediction.abs() <= u + 1e-8);
                let a = s.covariance();
                let n = a.dim();
                assert!(
                    (a.as_matrix() * s.covariance_inv().as_matrix() - Matrix::identity(n, n)).norm() <= 1e-6 * n as f64
                );
            } else {
                assert!(t.prediction.abs() <= u);
            }
        }
        assert!(rounds > 300);
        let min_eig = numerics::eigh(s.covariance()).unwrap().min_eigenvalue();
        assert!(min_eig >= 0.99 * mu);
        for tr in s.transitions() {
            assert!(tr.q_defect <= 1e-8);
            assert!((tr.prediction_new - tr.prediction_old).abs() <= 1e-8);
            let k = (tr.new_size - tr.old_size) as f64;
            assert!((tr.log_det_new - tr.log_det_prev - k * mu.ln()).abs() <= 1e-6);
            assert!(tr.inverse_drift <= 1e-6);
        }
    }

    #[test]
    fn con_kons_shares_covariance_but_not_weights() {
        let data = stream(55, 200, 2);
        let base = NonsConfig::new(gaussian(0.7), 5.0, 0.02, 1.0, 1.0).verified();
        let mut a = NonsState::new(base.clone()).unwrap();
        let mut b = NonsState::new(base.con_kons()).unwrap();
        let mut differ = false;
        for (x, y) in &data {
            let ta = a.step(x, *y).unwrap();
            let tb = b.step(x, *y).unwrap();
            assert_eq!(ta.branch, tb.branch);
            differ |= (ta.prediction - tb.prediction).abs() > 1e-12;
        }
        assert!(differ);
        for (ra, rb) in a.transitions().iter().zip(b.transitions()) {
            assert_eq!(ra.new_size, rb.new_size);
            assert!((rb.log_det_new - rb.log_det_prev - (rb.new_size - rb.old_size) as f64 * 5f64.ln()).abs() < 1e-6);
        }
    }

    #[test]
    fn dictionary_cap_is_a_resource_error() {
        let mut cfg = NonsConfig::new(gaussian(0.1), 1.0, 0.01, 1.0, 1.0);
        cfg.max_dictionary = Some(5);
        let mut s = NonsState::new(cfg).unwrap();
        let err = stream(56, 100, 2)
            .into_iter()
            .find_map(|(x, y)| s.step(&x, y).err())
            .unwrap();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn alpha_one_still_seeds_the_dictionary() {
        let mut s = NonsState::new(NonsConfig::new(gaussian(1.0), 1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!(s.step(&[0.0], 0.5).unwrap().branch, NonsBranch::Expanded);
        assert_eq!(s.step(&[3.0], 0.5).unwrap().branch, NonsBranch::Predicted);
        assert_eq!(s.dictionary().len(), 1);
    }

    #[test]
    fn trace_round_trips_as_json() {
        let mut s = NonsState::new(NonsConfig::new(gaussian(1.0), 1.0, 0.1, 1.0, 1.0)).unwrap();
        let t = s.step(&[0.0], 0.5).unwrap();
        let line = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<NonsTrace>(&line).unwrap(), t);
    }
}
