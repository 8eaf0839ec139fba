//! Kernel functions, Gram matrices and spectrum diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, SymMatrix, Vector};

/// A positive semidefinite kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// `exp(-‖x − v‖² / (2 ς²))`; normalized, `κ(x, x) = 1`.
    Gaussian { bandwidth: f64 },
    /// `xᵀv`.
    Linear,
}

impl Kernel {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::input(format!(
                "gaussian bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(Kernel::Gaussian { bandwidth })
    }

    pub fn is_normalized(&self) -> bool {
        matches!(self, Kernel::Gaussian { .. })
    }

    pub fn eval(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        numerics::check_len(x.len(), v.len())?;
        Ok(self.eval_unchecked(x, v))
    }

    /// Same as [`Kernel::eval`] without the dimension check.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], v: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { bandwidth } => {
                let sq: f64 = x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
            Kernel::Linear => x.iter().zip(v).map(|(a, b)| a * b).sum(),
        }
    }

    /// `κ(x, x)`.
    #[inline]
    pub fn self_similarity(&self, x: &[f64]) -> f64 {
        match self {
            Kernel::Gaussian { .. } => 1.0,
            Kernel::Linear => x.iter().map(|a| a * a).sum(),
        }
    }

    /// `(κ(x, p))_p` over `points`.
    pub fn cross(&self, points: &[Vec<f64>], x: &[f64]) -> Vector {
        Vector::from_iterator(points.len(), points.iter().map(|p| self.eval_unchecked(p, x)))
    }
}

/// Gram matrix of `xs`.
pub fn gram(kernel: &Kernel, xs: &[Vec<f64>]) -> Result<SymMatrix> {
    let Some(first) = xs.first() else {
        return Err(Error::input("gram matrix of an empty point set"));
    };
    let d = first.len();
    for x in xs {
        numerics::check_len(d, x.len())?;
    }
    Ok(SymMatrix::from_fn(xs.len(), |i, j| {
        kernel.eval_unchecked(&xs[i], &xs[j])
    }))
}

/// `tr(K (K + μI)⁻¹) = Σ λ_i / (λ_i + μ)`.
pub fn effective_dimension(gram: &SymMatrix, mu: f64) -> Result<f64> {
    let eig = numerics::eigh(gram)?;
    effective_dimension_from_spectrum(eig.eigenvalues.as_slice(), mu)
}

pub fn effective_dimension_from_spectrum(eigenvalues: &[f64], mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::input(format!("regularizer must be positive, got {mu}")));
    }
    Ok(eigenvalues
        .iter()
        .map(|&l| {
            let l = l.max(0.0);
            l / (l + mu)
        })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayKind {
    Exponential,
    Polynomial,
}

/// Least-squares fit of one decay model in log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub r0: f64,
    /// `r` for the exponential model `R₀ rⁱ`; `p` for the polynomial model `R₀ i^{-p}`.
    pub parameter: f64,
    /// Sum of squared residuals of `ln λ_i`.
    pub residual: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub best: DecayKind,
    pub exponential: ModelFit,
    pub polynomial: ModelFit,
    /// Set when the selected model shows no real decay or explains little variance.
    pub poor_fit: bool,
    pub points_used: usize,
}

impl DecayFit {
    pub fn best_fit(&self) -> &ModelFit {
        match self.best {
            DecayKind::Exponential => &self.exponential,
            DecayKind::Polynomial => &self.polynomial,
        }
    }
}

/// Eigenvalues entering the fit: the top `min(T, 200)`, excluding the noise floor.
pub const DECAY_FIT_MAX: usize = 200;
const DECAY_NOISE_FLOOR: f64 = 1e-12;

/// Fits `λ_i ≈ R₀ rⁱ` and `λ_i ≈ R₀ i^{-p}` (indices from 1) to a descending spectrum.
pub fn fit_decay(eigs: &[f64]) -> Result<DecayFit> {
    let lambda_max = eigs.iter().copied().fold(0.0_f64, f64::max);
    let used: Vec<f64> = eigs
        .iter()
        .take(DECAY_FIT_MAX)
        .copied()
        .take_while(|&l| l > DECAY_NOISE_FLOOR * lambda_max && l > 0.0)
        .collect();
    if used.len() < 5 {
        return Err(Error::input(format!(
            "decay fit needs at least 5 positive eigenvalues, got {}",
            used.len()
        )));
    }
    let logs: Vec<f64> = used.iter().map(|l| l.ln()).collect();
    let idx: Vec<f64> = (1..=used.len()).map(|i| i as f64).collect();
    let log_idx: Vec<f64> = idx.iter().map(|i| i.ln()).collect();

    let (a, b, res_e, r2_e) = linear_fit(&idx, &logs);
    let exponential = ModelFit {
        r0: a.exp(),
        parameter: b.exp(),
        residual: res_e,
        r_squared: r2_e,
    };
    let (a, b, res_p, r2_p) = linear_fit(&log_idx, &logs);
    let polynomial = ModelFit {
        r0: a.exp(),
        parameter: -b,
        residual: res_p,
        r_squared: r2_p,
    };

    let best = if res_e < res_p {
        DecayKind::Exponential
    } else {
        DecayKind::Polynomial
    };
    let chosen = match best {
        DecayKind::Exponential => &exponential,
        DecayKind::Polynomial => &polynomial,
    };
    let no_decay = match best {
        DecayKind::Exponential => chosen.parameter >= 1.0 - 1e-6,
        DecayKind::Polynomial => chosen.parameter <= 1e-6,
    };
    let poor_fit = no_decay || chosen.r_squared < 0.9;
    Ok(DecayFit {
        best,
        exponential,
        polynomial,
        poor_fit,
        points_used: used.len(),
    })
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b, ssr, r²)`.
/// `r²` is zero when `y` has no variance.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let ssr: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let r2 = if syy > 1e-300 { 1.0 - ssr / syy } else { 0.0 };
    (a, b, ssr, r2)
}

/// Spectrum summary of a kernel matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDiagnostics {
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// `(μ, d_eff(μ))` pairs.
    pub effective_dimension: Vec<(f64, f64)>,
    pub decay: Option<DecayFit>,
}

impl SpectrumDiagnostics {
    pub fn from_gram(gram: &SymMatrix, mus: &[f64]) -> Result<Self> {
        let eig = numerics::eigh(gram)?;
        let eigenvalues: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0)).collect();
        let effective_dimension = mus
            .iter()
            .map(|&mu| effective_dimension_from_spectrum(&eigenvalues, mu).map(|d| (mu, d)))
            .collect::<Result<Vec<_>>>()?;
        let decay = fit_decay(&eigenvalues).ok();
        Ok(SpectrumDiagnostics {
            eigenvalues,
            effective_dimension,
            decay,
        })
    }
}
