//! The embedding classifier: `input -> hidden1 -> hidden2 -> sigmoid`.
//!
//! Each layer computes `a = θ·w_prev + b` followed by `w = h(a)`. The first
//! hidden layer (`w1`) is the customer embedding. Training minimizes mean
//! binary cross-entropy with mini-batch Adam and stops early on validation
//! loss.

mod activation;
mod adam;
mod params;
mod propagation;
mod train;

pub use activation::{activate, sigmoid, ActivationKind, DEFAULT_LEAKY_ALPHA};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use params::{init_params, LayerSpec, Matrix, NetworkParams};
pub use propagation::{
    backward, batch_gradients, bce, forward, loss, ForwardTrace, GradientSet, PROB_CLAMP,
};
pub use train::{
    evaluate_loss, train, train_from, EpochStats, TrainConfig, TrainReport, MIN_IMPROVEMENT,
};

use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Probability of the positive class.
pub fn predict_proba(params: &NetworkParams, spec: &LayerSpec, x: &[f64]) -> Result<f64> {
    forward(params, spec, x).map(|t| t.w3)
}

/// 1 when the predicted probability is at least `threshold`.
pub fn classify(params: &NetworkParams, spec: &LayerSpec, x: &[f64], threshold: f64) -> Result<u8> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("threshold {threshold} must lie in (0, 1)")));
    }
    Ok(u8::from(predict_proba(params, spec, x)? >= threshold))
}
