//! Central finite-difference gradients, used to validate backpropagation.
//!
//! Only the forward loss is evaluated here, so this path is independent of
//! the analytic backward pass.

use super::lstm::{sequence_loss, LossWeights, Sequence};
use super::params::ModelParams;
use crate::error::Result;

pub fn numerical_gradient(
    params: &ModelParams,
    seq: &Sequence,
    w: LossWeights,
    eps: f64,
) -> Result<ModelParams> {
    let mut probe = params.clone();
    let mut grad = ModelParams::zeros(params.hidden());
    for k in 0..params.as_slice().len() {
        let orig = probe.as_slice()[k];
        probe.as_mut_slice()[k] = orig + eps;
        let (plus, _) = sequence_loss(&probe, seq, w)?;
        probe.as_mut_slice()[k] = orig - eps;
        let (minus, _) = sequence_loss(&probe, seq, w)?;
        probe.as_mut_slice()[k] = orig;
        grad.as_mut_slice()[k] = (plus - minus) / (2.0 * eps);
    }
    Ok(grad)
}

/// Element-wise relative error `|a - b| / max(|a|, |b|, floor)`; the floor
/// keeps entries whose true gradient is numerically zero from dominating.
pub fn max_relative_error(a: &ModelParams, b: &ModelParams, floor: f64) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}
