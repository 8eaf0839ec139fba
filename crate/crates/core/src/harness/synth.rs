//! Seeded synthetic regression streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::data::Dataset;
use crate::error::Result;
use crate::kernels::Kernel;

pub fn uniform_inputs(rng: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

/// `y = Σ_k w_k κ(c_k, x) + noise`, with `centers` random centers in `[-1, 1]^d`.
/// Targets are left unscaled.
pub fn kernel_expansion(seed: u64, n: usize, d: usize, centers: usize, bandwidth: f64, noise: f64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernel = Kernel::gaussian(bandwidth)?;
    let cs = uniform_inputs(&mut rng, centers, d);
    let ws: Vec<f64> = (0..centers).map(|_| rng.random_range(-1.0..1.0)).collect();
    let xs = uniform_inputs(&mut rng, n, d);
    let noise = Normal::new(0.0, noise.max(0.0)).expect("non-negative std");
    let ys = xs
        .iter()
        .map(|x| {
            let f: f64 = cs.iter().zip(&ws).map(|(c, w)| w * kernel.eval_unchecked(c, x)).sum();
            f + noise.sample(&mut rng)
        })
        .collect();
    Dataset::new(format!("kernel-expansion-{seed}"), xs, ys)
}

/// A random smooth function: a few low-frequency sinusoids of random
/// projections of `x`, plus Gaussian noise. Frequencies are scaled by `1/√d`
/// so smoothness does not depend on the dimension.
pub fn smooth_function(seed: u64, n: usize, d: usize, noise: f64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (d.max(1) as f64).sqrt();
    let terms: Vec<(Vec<f64>, f64, f64)> = (0..4)
        .map(|_| {
            let dir: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-2.5..2.5)).collect();
            (
                dir,
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.2..1.0),
            )
        })
        .collect();
    let xs = uniform_inputs(&mut rng, n, d);
    let noise = Normal::new(0.0, noise.max(0.0)).expect("non-negative std");
    let ys = xs
        .iter()
        .map(|x| {
            let f: f64 = terms
                .iter()
                .map(|(dir, phase, amp)| amp * (dir.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase).sin())
                .sum();
            f + noise.sample(&mut rng)
        })
        .collect();
    Dataset::new(format!("smooth-{seed}"), xs, ys)
}

/// Inputs whose Gaussian Gram spectrum decays fast: points on a short
/// one-dimensional curve embedded in `d` dimensions.
pub fn fast_decay_inputs(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dir: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
    (0..n)
        .map(|_| {
            let t: f64 = rng.random_range(-1.0..1.0);
            dir.iter().map(|v| t * v / norm).collect()
        })
        .collect()
}
