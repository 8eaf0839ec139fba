//! Online kernel regression with dictionaries maintained by the approximate
//! linear dependence (ALD) test.
//!
//! [`aogd`] and [`nons`] hold the two learners, [`baselines`] the reference
//! algorithms, [`harness`] data loading and experiments, and [`verify`] slow
//! oracles for the fast paths.

pub mod aogd;
pub mod baselines;
pub mod dictionary;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod learner;
pub mod nons;
pub mod numerics;
pub mod verify;

pub use error::{Error, Result};
pub use learner::{OnlineLearner, RoundOutcome};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/dictionary.md")]
    mod dictionary {}
    #[doc = include_str!("../../../book/src/feature_map.md")]
    mod feature_map {}
    #[doc = include_str!("../../../book/src/aogd.md")]
    mod aogd {}
    #[doc = include_str!("../../../book/src/nons.md")]
    mod nons {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
