use serde::{Deserialize, Serialize};

use crate::data::MeasurementProfile;
use crate::tnn::{rollout, TnnModel};
use crate::{Error, Result};

/// Half-width of the error band, K.
pub const DEFAULT_BAND: f64 = 10.0;

/// Recovery of one detuned start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    /// Initial offset per target, K.
    pub offsets: Vec<f64>,
    /// Seconds until the error enters the band for good; infinite if it never does.
    pub recovery: Vec<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTable {
    pub profile_id: String,
    pub targets: Vec<String>,
    pub band: f64,
    pub rows: Vec<RecoveryRow>,
}

/// Time after which every `|errors[k]|` stays within `band`.
///
/// 0 if the whole series is inside, infinite if the last sample is outside.
pub fn recovery_time(errors: &[f64], band: f64, sample_time: f64) -> f64 {
    match errors.iter().rposition(|e| !(e.abs() <= band)) {
        None => 0.0,
        Some(k) if k + 1 == errors.len() => f64::INFINITY,
        Some(k) => (k + 1) as f64 * sample_time,
    }
}

/// Offsets every target by the same amount, once per entry of `offsets` (K).
pub fn detuned_init_study(model: &TnnModel, profile: &MeasurementProfile, offsets: &[f64], band: f64) -> Result<RecoveryTable> {
    let m = model.topology.targets;
    let per_target: Vec<Vec<f64>> = offsets.iter().map(|o| vec![*o; m]).collect();
    detuned_init_study_per_target(model, profile, &per_target, band)
}

/// Starts the rollout at `truth[0] + offset` (K, per target) and measures recovery per target.
pub fn detuned_init_study_per_target(
    model: &TnnModel,
    profile: &MeasurementProfile,
    offsets: &[Vec<f64>],
    band: f64,
) -> Result<RecoveryTable> {
    if !(band > 0.0) {
        return Err(Error::Argument(format!("band must be positive, got {band}")));
    }
    let m = model.topology.targets;
    let divisors = model.schema.target_divisors()?;
    let ts = model.topology.sample_time;
    let mut rows = Vec::with_capacity(offsets.len());
    for offset in offsets {
        if offset.len() != m {
            return Err(Error::Shape(format!("offset has {} entries, expected {m}", offset.len())));
        }
        let x0: Vec<f64> = profile
            .targets(0)
            .iter()
            .zip(offset)
            .zip(&divisors)
            .map(|((y, o), d)| y + o / d)
            .collect();
        let row = match rollout(&model.topology, &model.params, profile, &x0) {
            Ok(traj) => {
                let recovery = (0..m)
                    .map(|t| {
                        let errors: Vec<f64> = (0..profile.len())
                            .map(|k| (traj.row(k)[t] - profile.targets(k)[t]) * divisors[t])
                            .collect();
                        recovery_time(&errors, band, ts)
                    })
                    .collect();
                RecoveryRow {
                    offsets: offset.clone(),
                    recovery,
                    diverged: false,
                }
            }
            Err(Error::Divergence { .. } | Error::Numerical { .. }) => RecoveryRow {
                offsets: offset.clone(),
                recovery: vec![f64::INFINITY; m],
                diverged: true,
            },
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    Ok(RecoveryTable {
        profile_id: profile.id().to_string(),
        targets: model.schema.targets.clone(),
        band,
        rows,
    })
}
