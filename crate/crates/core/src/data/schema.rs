use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::profile::ProfileDims;
use crate::{Error, Result};

/// Names, normalization divisors and sample time of the measured channels.
///
/// Channels fall into three groups: exogenous observables (ξ, `o` entries),
/// ancillary temperatures acting as ideal thermal sources (ϑ̃, `n` entries),
/// and target temperatures estimated by the model (ϑ, `m` entries).
///
/// Inside a [`MeasurementProfile`](super::MeasurementProfile) columns are laid
/// out as `[ancillary.., exogenous.., targets..]` so that the feature vector
/// φ = [ϑ̃; ξ] is a contiguous prefix of each row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSchema {
    pub exogenous: Vec<String>,
    pub ancillary: Vec<String>,
    pub targets: Vec<String>,
    /// Explicit divisors; channels not listed here fall back to [`default_divisor`].
    #[serde(default)]
    pub divisors: BTreeMap<String, f64>,
    /// Sample time in seconds.
    pub sample_time: f64,
}

/// Divisor used when the config does not name one.
///
/// Temperatures are divided by 100 °C, currents by 100 A, voltages by 130 V and
/// the mechanical angular frequency by 2π·6000 min⁻¹.
pub fn default_divisor(name: &str, is_temperature: bool) -> Option<f64> {
    if is_temperature {
        return Some(100.0);
    }
    match name {
        "i_s" | "i_d" | "i_q" => Some(100.0),
        "u_s" | "u_d" | "u_q" => Some(130.0),
        "omega_mech" => Some(2.0 * PI * 6000.0),
        "motor_speed" => Some(6000.0),
        _ => None,
    }
}

pub fn normalize(value: f64, divisor: f64) -> f64 {
    value / divisor
}

pub fn denormalize(value: f64, divisor: f64) -> f64 {
    value * divisor
}

impl ChannelSchema {
    pub fn new(
        exogenous: &[&str],
        ancillary: &[&str],
        targets: &[&str],
        sample_time: f64,
    ) -> Result<Self> {
        let schema = Self {
            exogenous: exogenous.iter().map(|s| s.to_string()).collect(),
            ancillary: ancillary.iter().map(|s| s.to_string()).collect(),
            targets: targets.iter().map(|s| s.to_string()).collect(),
            divisors: BTreeMap::new(),
            sample_time,
        };
        schema.validate_structure()?;
        Ok(schema)
    }

    /// Schema of the public electric-motor temperature dataset (2 Hz sampling).
    pub fn motor_default() -> Self {
        Self::new(
            &["u_s", "i_s", "omega_mech"],
            &["ambient", "coolant"],
            &["pm", "stator_yoke", "stator_tooth", "stator_winding"],
            0.5,
        )
        .expect("built-in schema is valid")
    }

    pub fn with_divisor(mut self, name: &str, divisor: f64) -> Self {
        self.divisors.insert(name.to_string(), divisor);
        self
    }

    /// Full check, including that every channel has a divisor.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        self.divisor_vector().map(|_| ())
    }

    /// Checks names, sample time and explicit divisors; channels may still lack a divisor.
    fn validate_structure(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Schema("at least one target channel is required".into()));
        }
        if !(self.sample_time.is_finite() && self.sample_time > 0.0) {
            return Err(Error::Schema(format!(
                "sample_time must be positive, got {}",
                self.sample_time
            )));
        }
        let mut seen = HashSet::new();
        for name in self.columns() {
            if name == "profile_id" {
                return Err(Error::Schema("`profile_id` is reserved".into()));
            }
            if !seen.insert(name) {
                return Err(Error::Schema(format!("channel `{name}` is listed twice")));
            }
        }
        for (name, &d) in &self.divisors {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Schema(format!(
                    "divisor for `{name}` must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Column names in profile layout order.
    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.ancillary
            .iter()
            .chain(&self.exogenous)
            .chain(&self.targets)
            .map(String::as_str)
    }

    pub fn dims(&self) -> ProfileDims {
        ProfileDims {
            ancillary: self.ancillary.len(),
            exogenous: self.exogenous.len(),
            targets: self.targets.len(),
        }
    }

    pub fn divisor(&self, name: &str) -> Result<f64> {
        if let Some(&d) = self.divisors.get(name) {
            return Ok(d);
        }
        let is_temperature =
            self.ancillary.iter().any(|c| c == name) || self.targets.iter().any(|c| c == name);
        default_divisor(name, is_temperature).ok_or_else(|| {
            Error::Schema(format!(
                "no normalization divisor configured for channel `{name}`"
            ))
        })
    }

    /// Divisors in profile layout order.
    pub fn divisor_vector(&self) -> Result<Vec<f64>> {
        self.columns().map(|c| self.divisor(c)).collect()
    }

    /// Divisors of the target channels only.
    pub fn target_divisors(&self) -> Result<Vec<f64>> {
        self.targets.iter().map(|c| self.divisor(c)).collect()
    }

    pub fn ancillary_divisors(&self) -> Result<Vec<f64>> {
        self.ancillary.iter().map(|c| self.divisor(c)).collect()
    }

    pub fn with_sample_time(mut self, sample_time: f64) -> Self {
        self.sample_time = sample_time;
        self
    }
}
