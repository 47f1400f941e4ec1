use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Input generator for one ancillary or exogenous channel.
///
/// The signal is a sequence of segments with random dwell times. Each segment
/// either holds a uniformly drawn level or, with probability
/// `walk_probability`, performs a Gaussian random walk from the current value.
/// Values are kept inside `[low, high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Excitation {
    pub channel: String,
    pub low: f64,
    pub high: f64,
    /// Segment duration bounds in seconds.
    pub dwell_min: f64,
    pub dwell_max: f64,
    #[serde(default)]
    pub walk_probability: f64,
    /// Standard deviation of one random-walk step per sample.
    #[serde(default)]
    pub walk_step: f64,
}

impl Excitation {
    pub fn constant(channel: &str, value: f64) -> Self {
        Self {
            channel: channel.into(),
            low: value,
            high: value,
            dwell_min: 1.0,
            dwell_max: 1.0,
            walk_probability: 0.0,
            walk_step: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Argument(format!("excitation `{}`: {what}", self.channel)));
        if !(self.low.is_finite() && self.high.is_finite()) || self.low > self.high {
            return bad("requires finite low <= high");
        }
        if !(self.dwell_min > 0.0) || self.dwell_min > self.dwell_max || !self.dwell_max.is_finite() {
            return bad("requires 0 < dwell_min <= dwell_max");
        }
        if !(0.0..=1.0).contains(&self.walk_probability) {
            return bad("walk_probability must lie in [0, 1]");
        }
        if !(self.walk_step >= 0.0 && self.walk_step.is_finite()) {
            return bad("walk_step must be non-negative");
        }
        Ok(())
    }
}

/// Draws `len` samples spaced `sample_time` seconds apart.
pub fn excite(spec: &Excitation, len: usize, sample_time: f64, rng: &mut impl Rng) -> Result<Vec<f64>> {
    spec.validate()?;
    let span = spec.high - spec.low;
    let step = Normal::new(0.0, spec.walk_step.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Argument(format!("excitation `{}`: {e}", spec.channel)))?;
    let mut out = Vec::with_capacity(len);
    let mut value = spec.low + span * rng.random::<f64>();
    while out.len() < len {
        let dwell = spec.dwell_min + (spec.dwell_max - spec.dwell_min) * rng.random::<f64>();
        let samples = ((dwell / sample_time).round() as usize).max(1);
        let walk = rng.random::<f64>() < spec.walk_probability;
        if !walk {
            value = spec.low + span * rng.random::<f64>();
        }
        for _ in 0..samples.min(len - out.len()) {
            if walk {
                value = (value + step.sample(rng)).clamp(spec.low, spec.high);
            }
            out.push(value);
        }
    }
    Ok(out)
}
