//! Reference learners: kernel ONS in implicit form and over explicit
//! features, FOGD with random Fourier features, and NOGD with a fixed
//! Nyström budget.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, FeatureMap};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::learner::{self, OnlineLearner, RoundOutcome};
use crate::nons::project_w;
use crate::numerics::{self, Matrix, SymMatrix, Vector};

/// Rounds beyond which implicit KONS refuses to continue.
pub const KONS_MAX_ROUNDS: usize = 3000;

/// `1/(4(U² + Y²))`.
pub fn ons_eta(radius: f64, target_bound: f64) -> f64 {
    1.0 / (4.0 * (radius * radius + target_bound * target_bound))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KonsConfig {
    pub kernel: Kernel,
    pub mu: f64,
    pub eta: f64,
    /// ALD threshold; `None` uses the exact gradient every round.
    pub alpha: Option<f64>,
    pub max_rounds: usize,
}

impl KonsConfig {
    pub fn new(kernel: Kernel, mu: f64, eta: f64) -> Self {
        KonsConfig {
            kernel,
            mu,
            eta,
            alpha: None,
            max_rounds: KONS_MAX_ROUNDS,
        }
    }

    pub fn with_ald(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }
}

/// Gradient direction of one past round, as coefficients over stored points.
#[derive(Clone, Debug)]
enum Direction {
    Point(usize),
    Span(Vec<f64>),
}

impl Direction {
    fn dot(&self, v: &[f64]) -> f64 {
        match self {
            Direction::Point(i) => v[*i],
            Direction::Span(b) => b.iter().zip(v).map(|(a, c)| a * c).sum(),
        }
    }

    fn add_to(&self, scale: f64, out: &mut [f64]) {
        match self {
            Direction::Point(i) => out[*i] += scale,
            Direction::Span(b) => b.iter().zip(out.iter_mut()).for_each(|(a, o)| *o += scale * a),
        }
    }
}

/// Kernel ONS without any explicit feature map.
///
/// Every past gradient is `√η_τ g_τ φ̂_τ` with `φ̂_τ` either `κ(x_τ, ·)` or its
/// dictionary projection. `A_t⁻¹` is applied through the `t x t` matrix
/// `Φ̂ᵀΦ̂ + μI`, whose inverse is grown by bordering.
#[derive(Clone, Debug)]
pub struct KonsState {
    config: KonsConfig,
    dim: Option<usize>,
    dict: Option<Dictionary>,
    points: Vec<Vec<f64>>,
    gram: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    history: Vec<(Direction, f64)>,
    m_inv: Matrix,
}

impl KonsState {
    pub fn new(config: KonsConfig) -> Result<Self> {
        if !(config.mu > 0.0) || !(config.eta > 0.0) {
            return Err(Error::input("KONS needs positive mu and eta"));
        }
        let dict = config.alpha.map(|a| Dictionary::new(config.kernel, a)).transpose()?;
        Ok(KonsState {
            config,
            dim: None,
            dict,
            points: Vec::new(),
            gram: Vec::new(),
            coeffs: Vec::new(),
            history: Vec::new(),
            m_inv: Matrix::zeros(0, 0),
        })
    }

    pub fn rounds(&self) -> usize {
        self.history.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let k = &self.config.kernel;
        self.points
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| c * k.eval_unchecked(p, x))
            .sum()
    }

    fn push_point(&mut self, x: &[f64]) {
        let k = &self.config.kernel;
        let row: Vec<f64> = self.points.iter().map(|p| k.eval_unchecked(p, x)).collect();
        for (r, v) in self.gram.iter_mut().zip(&row) {
            r.push(*v);
        }
        let mut row = row;
        row.push(k.self_similarity(x));
        self.gram.push(row);
        self.points.push(x.to_vec());
        self.coeffs.push(0.0);
    }

    pub fn step(&mut self, x: &[f64], y: f64) -> Result<f64> {
        learner::check_round_input(x, y)?;
        learner::check_dim(&mut self.dim, x)?;
        if self.history.len() >= self.config.max_rounds {
            return Err(Error::ResourceCap(format!(
                "implicit KONS is capped at {} rounds",
                self.config.max_rounds
            )));
        }
        let prediction = self.predict(x);
        let g = 2.0 * (prediction - y);

        let dir = match &mut self.dict {
            Some(dict) => {
                let res = dict.ald_test(x)?;
                if res.holds && !dict.is_empty() {
                    Direction::Span(res.beta.iter().copied().collect())
                } else {
                    dict.add_atom(x, y, &res)?;
                    self.push_point(x);
                    Direction::Point(self.points.len() - 1)
                }
            }
            None => {
                self.push_point(x);
                Direction::Point(self.points.len() - 1)
            }
        };

        // K b_t over all stored points
        let n = self.points.len();
        let kb: Vec<f64> = match &dir {
            Direction::Point(i) => (0..n).map(|r| self.gram[r][*i]).collect(),
            Direction::Span(b) => (0..n)
                .map(|r| b.iter().enumerate().map(|(c, v)| v * self.gram[r][c]).sum())
                .collect(),
        };
        let s = (self.config.eta).sqrt() * g;
        let self_inner = dir.dot(&kb);
        let r: Vec<f64> = self.history.iter().map(|(d, sa)| sa * d.dot(&kb)).collect();

        // border (Φ̂ᵀΦ̂ + μI)⁻¹ with the new column (s r, s² ⟨φ̂,φ̂⟩ + μ)
        let t = self.history.len();
        let col = Vector::from_iterator(t, r.iter().map(|v| v * s));
        let corner = s * s * self_inner + self.config.mu;
        let mb = &self.m_inv * &col;
        let schur = corner - col.dot(&mb);
        if !(schur > 0.0) {
            return Err(Error::numeric(format!(
                "KONS bordered inverse lost definiteness ({schur:e})"
            )));
        }
        let mut m = Matrix::zeros(t + 1, t + 1);
        m.view_mut((0, 0), (t, t))
            .copy_from(&(&self.m_inv + &mb * mb.transpose() / schur));
        for i in 0..t {
            m[(i, t)] = -mb[i] / schur;
            m[(t, i)] = -mb[i] / schur;
        }
        m[(t, t)] = 1.0 / schur;
        self.m_inv = m;
        self.history.push((dir, s));

        if g != 0.0 {
            // A_t⁻¹ g φ̂_t = (g/μ)(φ̂_t − Σ_a z_a s_a φ̂_a),  z = M⁻¹ (s_a ⟨φ̂_a, φ̂_t⟩)_a
            let rhs = Vector::from_iterator(t + 1, r.iter().copied().chain(std::iter::once(s * self_inner)));
            let z = &self.m_inv * rhs;
            let mut delta = vec![0.0; n];
            self.history[t].0.add_to(1.0, &mut delta);
            for (a, (d, sa)) in self.history.iter().enumerate() {
                d.add_to(-z[a] * sa, &mut delta);
            }
            let scale = -g / self.config.mu;
            for (c, d) in self.coeffs.iter_mut().zip(delta) {
                *c += scale * d;
            }
        }
        Ok(prediction)
    }
}

impl OnlineLearner for KonsState {
    fn step(&mut self, x: &[f64], y: f64) -> Result<RoundOutcome> {
        KonsState::step(self, x, y).map(RoundOutcome::predicted)
    }

    fn buffer_size(&self) -> usize {
        self.points.len()
    }

    fn memory_estimate(&self) -> usize {
        let n = self.points.len();
        let t = self.history.len();
        8 * (n * (self.dim.unwrap_or(0) + n + 1) + t * t + t * n)
    }
}

/// Online Newton step over explicit feature vectors, with an optional slab
/// projection `|wᵀφ(x_next)| ≤ U` resolved at the next instance.
#[derive(Clone, Debug)]
pub struct ExplicitOns {
    w: Vector,
    a: SymMatrix,
    a_inv: SymMatrix,
    eta: f64,
    radius: Option<f64>,
    pending: Option<Vector>,
}

impl ExplicitOns {
    pub fn new(dim: usize, mu: f64, eta: f64, radius: Option<f64>) -> Result<Self> {
        if !(mu > 0.0) || !(eta > 0.0) {
            return Err(Error::input("ONS needs positive mu and eta"));
        }
        Ok(ExplicitOns {
            w: Vector::zeros(dim),
            a: SymMatrix::scaled_identity(dim, mu),
            a_inv: SymMatrix::scaled_identity(dim, 1.0 / mu),
            eta,
            radius,
            pending: None,
        })
    }

    pub fn weights(&self) -> &Vector {
        &self.w
    }

    pub fn covariance(&self) -> &SymMatrix {
        &self.a
    }

    pub fn step(&mut self, phi: &Vector, y: f64) -> Result<f64> {
        numerics::check_len(self.w.len(), phi.len())?;
        if let (Some(w_tilde), Some(u)) = (self.pending.take(), self.radius) {
            self.w = project_w(&w_tilde, &self.a_inv, phi, u)?;
        } else if let Some(w_tilde) = self.pending.take() {
            self.w = w_tilde;
        }
        let prediction = self.w.dot(phi);
        let g = 2.0 * (prediction - y);
        let c = self.eta * g * g;
        if c > 0.0 {
            self.a = self.a.add_rank_one(c, phi)?;
            self.a_inv = numerics::rank_one_inverse_update(&self.a_inv, phi, c)?;
        }
        let w_tilde = &self.w - self.a_inv.mul_vec(phi) * g;
        if self.radius.is_some() {
            self.pending = Some(w_tilde);
        } else {
            self.w = w_tilde;
        }
        Ok(prediction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FogdConfig {
    pub bandwidth: f64,
    /// Number of sampled frequencies `D`; the feature vector has `2D` entries.
    pub features: usize,
    pub eta: f64,
    pub seed: u64,
}

/// Kernel OGD approximated by random Fourier features
/// `z(x) = D^{-1/2} (cos ωᵢᵀx, sin ωᵢᵀx)_i`, `ωᵢ ~ N(0, ς⁻² I)`.
#[derive(Clone, Debug)]
pub struct FogdState {
    config: FogdConfig,
    dim: usize,
    frequencies: Matrix,
    w: Vector,
}

impl FogdState {
    pub fn new(config: FogdConfig, dim: usize) -> Result<Self> {
        if config.features == 0 || dim == 0 {
            return Err(Error::input("FOGD needs at least one feature and one input dimension"));
        }
        if !(config.eta > 0.0) {
            return Err(Error::input("FOGD step size must be positive"));
        }
        let normal = Normal::new(0.0, 1.0 / config.bandwidth)
            .map_err(|e| Error::input(format!("invalid bandwidth {}: {e}", config.bandwidth)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let frequencies = Matrix::from_fn(config.features, dim, |_, _| normal.sample(&mut rng));
        Ok(FogdState {
            w: Vector::zeros(2 * config.features),
            config,
            dim,
            frequencies,
        })
    }

    pub fn features(&self, x: &[f64]) -> Result<Vector> {
        numerics::check_len(self.dim, x.len())?;
        let d = self.config.features;
        let proj = &self.frequencies * Vector::from_column_slice(x);
        let scale = 1.0 / (d as f64).sqrt();
        let mut z = Vector::zeros(2 * d);
        for (i, p) in proj.iter().enumerate() {
            let (s, c) = p.sin_cos();
            z[i] = scale * c;
            z[d + i] = scale * s;
        }
        Ok(z)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.w.dot(&self.features(x)?))
    }

    pub fn step(&mut self, x: &[f64], y: f64) -> Result<f64> {
        learner::check_round_input(x, y)?;
        let z = self.features(x)?;
        let prediction = self.w.dot(&z);
        self.w -= z * (self.config.eta * 2.0 * (prediction - y));
        Ok(prediction)
    }
}

impl OnlineLearner for FogdState {
    fn step(&mut self, x: &[f64], y: f64) -> Result<RoundOutcome> {
        FogdState::step(self, x, y).map(RoundOutcome::predicted)
    }

    fn buffer_size(&self) -> usize {
        self.config.features
    }

    fn memory_estimate(&self) -> usize {
        8 * self.config.features * (self.dim + 2)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NogdConfig {
    pub kernel: Kernel,
    /// Budget `J`.
    pub budget: usize,
    pub eta: f64,
}

/// Kernel OGD on the first `J` points, then OGD on the frozen Nyström features
/// of those points.
#[derive(Clone, Debug)]
pub struct NogdState {
    config: NogdConfig,
    dim: Option<usize>,
    atoms: Vec<Vec<f64>>,
    coeffs: Vec<f64>,
    frozen: Option<(FeatureMap, Vector)>,
}

impl NogdState {
    pub fn new(config: NogdConfig) -> Result<Self> {
        if config.budget == 0 {
            return Err(Error::input("NOGD budget must be at least 1"));
        }
        if !(config.eta > 0.0) {
            return Err(Error::input("NOGD step size must be positive"));
        }
        Ok(NogdState {
            config,
            dim: None,
            atoms: Vec::new(),
            coeffs: Vec::new(),
            frozen: None,
        })
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen.is_some()
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn feature_map(&self) -> Option<&FeatureMap> {
        self.frozen.as_ref().map(|(m, _)| m)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match &self.frozen {
            Some((map, w)) => Ok(w.dot(&map.apply(x)?)),
            None => {
                let k = &self.config.kernel;
                Ok(self
                    .atoms
                    .iter()
                    .zip(&self.coeffs)
                    .map(|(p, c)| c * k.eval_unchecked(p, x))
                    .sum())
            }
        }
    }

    pub fn step(&mut self, x: &[f64], y: f64) -> Result<f64> {
        learner::check_round_input(x, y)?;
        learner::check_dim(&mut self.dim, x)?;
        let prediction = self.predict(x)?;
        let g = 2.0 * (prediction - y);
        let eta = self.config.eta;
        match &mut self.frozen {
            Some((map, w)) => {
                let phi = map.apply(x)?;
                *w -= phi * (eta * g);
            }
            None => {
                self.atoms.push(x.to_vec());
                self.coeffs.push(-eta * g);
                if self.atoms.len() == self.config.budget {
                    self.freeze()?;
                }
            }
        }
        Ok(prediction)
    }

    /// `w = Σ^{1/2} Uᵀ a`, so that `wᵀφ(x) = aᵀk_x`.
    fn freeze(&mut self) -> Result<()> {
        let gram = crate::kernels::gram(&self.config.kernel, &self.atoms)?;
        let eig = numerics::eigh(&gram)?;
        let sqrt = eig.clamped_eigenvalues().map(f64::sqrt);
        let a = Vector::from_column_slice(&self.coeffs);
        let w = Matrix::from_diagonal(&sqrt) * eig.eigenvectors.transpose() * a;
        let map = FeatureMap::from_atoms(self.config.kernel, self.atoms.clone())?;
        self.frozen = Some((map, w));
        Ok(())
    }
}

impl OnlineLearner for NogdState {
    fn step(&mut self, x: &[f64], y: f64) -> Result<RoundOutcome> {
        NogdState::step(self, x, y).map(RoundOutcome::predicted)
    }

    fn buffer_size(&self) -> usize {
        self.atoms.len()
    }

    fn memory_estimate(&self) -> usize {
        let j = self.atoms.len();
        8 * (j * (self.dim.unwrap_or(0) + 1) + 2 * j * j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::testing::*;
    use rand::Rng;

    fn unit_circle(seed: u64, n: usize) -> Vec<(Vec<f64>, f64)> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| {
                let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
                let x = vec![t.cos(), t.sin()];
                let y = 0.3 * x[0] - 0.6 * x[1] + 0.1 * r.random_range(-1.0..1.0);
                (x, y)
            })
            .collect()
    }

    fn smooth(seed: u64, n: usize, d: usize) -> Vec<(Vec<f64>, f64)> {
        let mut r = rng(seed);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
                let y = 0.5 + 0.4 * (2.0 * x[0]).sin();
                (x, y)
            })
            .collect()
    }

    #[test]
    fn kons_first_round_predicts_zero() {
        let mut k = KonsState::new(KonsConfig::new(Kernel::gaussian(1.0).unwrap(), 1.0, 0.1)).unwrap();
        assert_eq!(k.step(&[0.5], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn kons_linear_matches_explicit_ons() {
        let eta = ons_eta(1.0, 1.0);
        let data = unit_circle(61, 200);
        for cfg in [
            KonsConfig::new(Kernel::Linear, 1.0, eta),
            KonsConfig::new(Kernel::Linear, 1.0, eta).with_ald(1e-10),
        ] {
            let mut kons = KonsState::new(cfg).unwrap();
            let mut ons = ExplicitOns::new(2, 1.0, eta, None).unwrap();
            for (x, y) in &data {
                let a = kons.step(x, *y).unwrap();
                let b = ons.step(&Vector::from_column_slice(x), *y).unwrap();
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn kons_exact_matches_dense_recursion() {
        let k = Kernel::gaussian(0.8).unwrap();
        let (mu, eta) = (2.0, 0.2);
        let data = smooth(62, 50, 2);
        let mut kons = KonsState::new(KonsConfig::new(k, mu, eta)).unwrap();
        let xs: Vec<Vec<f64>> = data.iter().map(|d| d.0.clone()).collect();
        let mut c: Vec<f64> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (t, (x, y)) in data.iter().enumerate() {
            let p: f64 = (0..t).map(|i| c[i] * k.eval(&xs[i], x).unwrap()).sum();
            assert!((kons.step(x, *y).unwrap() - p).abs() < 1e-10);
            let g = 2.0 * (p - y);
            weights.push(eta * g * g);
            c.push(0.0);
            // (μI + D K) v = e_t;  f ← f − g Φ v
            let n = t + 1;
            let gram = crate::kernels::gram(&k, &xs[..n]).unwrap();
            let m = Matrix::identity(n, n) * mu
                + Matrix::from_diagonal(&Vector::from_column_slice(&weights)) * gram.as_matrix();
            let mut e = Vector::zeros(n);
            e[t] = 1.0;
            let v = m.lu().solve(&e).unwrap();
            for i in 0..n {
                c[i] -= g * v[i];
            }
        }
        assert_eq!(kons.rounds(), 50);
    }

    #[test]
    fn kons_round_cap() {
        let mut cfg = KonsConfig::new(Kernel::Linear, 1.0, 0.1);
        cfg.max_rounds = 2;
        let mut k = KonsState::new(cfg).unwrap();
        k.step(&[1.0], 0.0).unwrap();
        k.step(&[1.0], 0.0).unwrap();
        assert!(matches!(k.step(&[1.0], 0.0), Err(Error::ResourceCap(_))));
    }

    #[test]
    fn fogd_basics() {
        let cfg = FogdConfig {
            bandwidth: 1.0,
            features: 64,
            eta: 0.1,
            seed: 7,
        };
        let mut f = FogdState::new(cfg.clone(), 3).unwrap();
        let x = [0.1, 0.2, -0.3];
        assert_eq!(f.predict(&x).unwrap(), 0.0);
        assert!((f.features(&x).unwrap().norm_squared() - 1.0).abs() < 1e-12);
        let before = (f.predict(&x).unwrap() - 0.8).powi(2);
        f.step(&x, 0.8).unwrap();
        let after = (f.predict(&x).unwrap() - 0.8).powi(2);
        assert!(after < before);
        let g = FogdState::new(cfg, 3).unwrap();
        assert_eq!(
            g.features(&x).unwrap(),
            FogdState::new(f.config.clone(), 3).unwrap().features(&x).unwrap()
        );
    }

    #[test]
    fn fogd_large_d_approximates_kernel() {
        let k = Kernel::gaussian(1.0).unwrap();
        let f = FogdState::new(
            FogdConfig {
                bandwidth: 1.0,
                features: 4096,
                eta: 0.1,
                seed: 8,
            },
            2,
        )
        .unwrap();
        let (x, v) = ([0.3, -0.2], [-0.4, 0.5]);
        let approx = f.features(&x).unwrap().dot(&f.features(&v).unwrap());
        assert!((approx - k.eval(&x, &v).unwrap()).abs() < 0.05);
    }

    #[test]
    fn fogd_is_unbiased_over_seeds() {
        let k = Kernel::gaussian(0.7).unwrap();
        let mut r = rng(63);
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..10)
            .map(|_| {
                (
                    (0..3).map(|_| r.random_range(-1.0..1.0)).collect(),
                    (0..3).map(|_| r.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let maps: Vec<FogdState> = (0..20)
            .map(|s| {
                FogdState::new(
                    FogdConfig {
                        bandwidth: 0.7,
                        features: 1024,
                        eta: 0.1,
                        seed: 100 + s,
                    },
                    3,
                )
                .unwrap()
            })
            .collect();
        for (x, v) in &pairs {
            let mean: f64 = maps
                .iter()
                .map(|m| m.features(x).unwrap().dot(&m.features(v).unwrap()))
                .sum::<f64>()
                / 20.0;
            assert!((mean - k.eval(x, v).unwrap()).abs() <= 0.02);
        }
    }

    #[test]
    fn nogd_growth_and_freeze() {
        let k = Kernel::gaussian(1.0).unwrap();
        let mut n = NogdState::new(NogdConfig {
            kernel: k,
            budget: 1,
            eta: 0.5,
        })
        .unwrap();
        n.step(&[0.0, 0.0], 1.0).unwrap();
        assert!(n.is_frozen());
        let phi = n.feature_map().unwrap().apply(&[0.3, 0.1]).unwrap();
        assert!((phi[0].abs() - k.eval(&[0.0, 0.0], &[0.3, 0.1]).unwrap()).abs() < 1e-12);

        let data = smooth(64, 100, 2);
        let mut n = NogdState::new(NogdConfig {
            kernel: k,
            budget: 10,
            eta: 0.5,
        })
        .unwrap();
        for (i, (x, y)) in data.iter().enumerate() {
            n.step(x, *y).unwrap();
            assert_eq!(n.atoms().len(), (i + 1).min(10));
            assert_eq!(n.is_frozen(), i >= 9);
        }
    }

    #[test]
    fn nogd_freeze_preserves_the_function() {
        let k = Kernel::gaussian(0.6).unwrap();
        let data = smooth(65, 12, 2);
        let mut a = NogdState::new(NogdConfig {
            kernel: k,
            budget: 12,
            eta: 0.3,
        })
        .unwrap();
        let mut b = NogdState::new(NogdConfig {
            kernel: k,
            budget: 100,
            eta: 0.3,
        })
        .unwrap();
        for (x, y) in &data {
            a.step(x, *y).unwrap();
            b.step(x, *y).unwrap();
        }
        assert!(a.is_frozen() && !b.is_frozen());
        for (x, _) in smooth(66, 20, 2) {
            assert!((a.predict(&x).unwrap() - b.predict(&x).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn nogd_full_budget_reproduces_gram() {
        let k = Kernel::gaussian(0.6).unwrap();
        let data = smooth(67, 30, 2);
        let mut n = NogdState::new(NogdConfig {
            kernel: k,
            budget: 30,
            eta: 0.3,
        })
        .unwrap();
        for (x, y) in &data {
            n.step(x, *y).unwrap();
        }
        let map = n.feature_map().unwrap();
        let xs: Vec<Vec<f64>> = data.iter().map(|d| d.0.clone()).collect();
        assert!(map.spectral_error_certificate(&xs).unwrap() < 1e-8);
    }
}
