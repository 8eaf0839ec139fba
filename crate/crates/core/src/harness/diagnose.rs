//! Spectrum diagnostics and parameter suggestions from the fitted decay.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{self, DecayFit, DecayKind, Kernel, SpectrumDiagnostics};

/// `μ` values at which the effective dimension is reported.
pub const DIAGNOSTIC_MUS: [f64; 3] = [1.0, 5.0, 15.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub decay: DecayKind,
    /// Fitted `p`, clamped to at least 1; absent for exponential decay.
    pub degree: Option<f64>,
    pub horizon: usize,
    pub mu: f64,
    pub alpha: f64,
}

/// Exponential decay: `μ = 1`, `α = ln⁴T / T⁴`.
/// Polynomial decay of degree `p`: `μ = T^{1/(1+p)}`, `α = T^{-4p/(1+p)}`.
pub fn suggest(fit: &DecayFit, horizon: usize) -> Suggestion {
    let t = horizon.max(2) as f64;
    match fit.best {
        DecayKind::Exponential => Suggestion {
            decay: DecayKind::Exponential,
            degree: None,
            horizon,
            mu: 1.0,
            alpha: t.ln().powi(4) / t.powi(4),
        },
        DecayKind::Polynomial => {
            let p = fit.polynomial.parameter.max(1.0);
            Suggestion {
                decay: DecayKind::Polynomial,
                degree: Some(p),
                horizon,
                mu: t.powf(1.0 / (1.0 + p)),
                alpha: t.powf(-4.0 * p / (1.0 + p)),
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub dataset: String,
    pub sample_size: usize,
    pub kernel: Kernel,
    pub spectrum: SpectrumDiagnostics,
    /// Absent when too few eigenvalues rise above the noise floor to fit a decay.
    pub suggestion: Option<Suggestion>,
}

/// Fits the Gram spectrum of a uniform subsample of `sample_size` rows and
/// suggests `(μ, α)` for a stream of the full dataset's length.
pub fn diagnose_spectrum(data: &Dataset, kernel: &Kernel, sample_size: usize, seed: u64) -> Result<Diagnosis> {
    data.validate()?;
    if sample_size == 0 || sample_size > data.len() {
        return Err(Error::input(format!(
            "sample size {sample_size} must be between 1 and the dataset size {}",
            data.len()
        )));
    }
    let points: Vec<Vec<f64>> = if sample_size == data.len() {
        data.features.clone()
    } else {
        let mut idx =
            rand::seq::index::sample(&mut ChaCha8Rng::seed_from_u64(seed), data.len(), sample_size).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| data.features[i].clone()).collect()
    };
    let gram = kernels::gram(kernel, &points)?;
    let spectrum = SpectrumDiagnostics::from_gram(&gram, &DIAGNOSTIC_MUS)?;
    let suggestion = spectrum.decay.as_ref().map(|f| suggest(f, data.len()));
    Ok(Diagnosis {
        dataset: data.name.clone(),
        sample_size,
        kernel: *kernel,
        spectrum,
        suggestion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth;
    use crate::numerics;

    #[test]
    fn exponential_spectrum_suggests_constant_mu() {
        let xs = synth::fast_decay_inputs(2, 300, 3);
        let data = Dataset::new("curve", xs, vec![0.0; 300]).unwrap();
        let d = diagnose_spectrum(&data, &Kernel::gaussian(1.0).unwrap(), 150, 9).unwrap();
        let s = d.suggestion.unwrap();
        assert_eq!(s.decay, DecayKind::Exponential);
        assert_eq!(s.mu, 1.0);
        let t = 300f64;
        assert!((s.alpha - t.ln().powi(4) / t.powi(4)).abs() <= 1e-15 * s.alpha.max(1e-300));
    }

    #[test]
    fn polynomial_degree_ten_plugs_into_schedule() {
        let eigs: Vec<f64> = (1..=60).map(|i| (i as f64).powi(-10)).collect();
        let fit = kernels::fit_decay(&eigs).unwrap();
        assert_eq!(fit.best, DecayKind::Polynomial);
        let s = suggest(&fit, 1000);
        let t = 1000f64;
        assert!((s.degree.unwrap() - 10.0).abs() < 1e-6);
        assert!((s.mu / t.powf(1.0 / 11.0) - 1.0).abs() < 1e-6);
        assert!((s.alpha.ln() - (-40.0 / 11.0) * t.ln()).abs() < 1e-5);
    }

    #[test]
    fn full_sample_uses_the_full_gram() {
        let data = synth::smooth_function(3, 40, 2, 0.0).unwrap();
        let k = Kernel::gaussian(0.5).unwrap();
        let d = diagnose_spectrum(&data, &k, 40, 0).unwrap();
        let eig = numerics::eigh(&kernels::gram(&k, &data.features).unwrap()).unwrap();
        for (a, b) in d.spectrum.eigenvalues.iter().zip(eig.eigenvalues.iter()) {
            assert!((a - b.max(0.0)).abs() < 1e-12);
        }
        assert!(diagnose_spectrum(&data, &k, 41, 0).is_err());
    }
}
