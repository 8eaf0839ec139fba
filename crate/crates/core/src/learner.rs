use serde::{Deserialize, Serialize};

use crate::error::Result;

/// What a learner reports for one round of the online protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub prediction: f64,
    /// `false` on NONS-ALD expansion rounds, where the prediction comes from
    /// the previous epoch's model.
    pub is_prediction_round: bool,
}

impl RoundOutcome {
    pub fn predicted(prediction: f64) -> Self {
        RoundOutcome {
            prediction,
            is_prediction_round: true,
        }
    }
}

/// A learner for the online regression protocol: predict `ŷ_t` for `x_t`,
/// then observe `y_t` and update.
pub trait OnlineLearner: Send {
    fn step(&mut self, x: &[f64], y: f64) -> Result<RoundOutcome>;

    /// Dictionary size `J`, or feature count `D` for random-feature models.
    fn buffer_size(&self) -> usize;

    /// Rough bytes held by the model state.
    fn memory_estimate(&self) -> usize;
}

pub(crate) fn check_round_input(x: &[f64], y: f64) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(crate::Error::input("instance has non-finite features"));
    }
    if !y.is_finite() {
        return Err(crate::Error::input("target is not finite"));
    }
    Ok(())
}

pub(crate) fn check_dim(expected: &mut Option<usize>, x: &[f64]) -> Result<()> {
    match *expected {
        Some(d) => crate::numerics::check_len(d, x.len()),
        None => {
            if x.is_empty() {
                return Err(crate::Error::input("instance has no features"));
            }
            *expected = Some(x.len());
            Ok(())
        }
    }
}
