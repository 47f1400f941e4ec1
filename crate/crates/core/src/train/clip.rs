use crate::tnn::TnnParameters;
use crate::{Error, Result};

/// Global ℓ2 norm over all parameter blocks.
pub fn global_norm(grads: &TnnParameters) -> Result<f64> {
    let mut sum = 0.0;
    for (name, block) in grads.blocks() {
        if block.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { block: name });
        }
        sum += block.iter().map(|g| g * g).sum::<f64>();
    }
    Ok(sum.sqrt())
}

/// Rescales `grads` so its global norm is at most `threshold`.
///
/// Returns the norm before clipping.
pub fn clip_gradients(grads: &mut TnnParameters, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0) {
        return Err(Error::Argument(format!("clip threshold must be positive, got {threshold}")));
    }
    let norm = global_norm(grads)?;
    if norm > threshold {
        grads.scale(threshold / norm);
    }
    Ok(norm)
}
