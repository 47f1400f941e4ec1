use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MeasurementProfile;
use crate::tnn::{count_parameters, rollout, TnnModel, Trajectory};
use crate::{Error, Result};

/// How the state estimate is initialized before a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum InitMode {
    /// Measured targets at k = 0.
    GroundTruth,
    /// Every target starts at the first ancillary temperature.
    Ambient,
    /// Every target starts at this temperature in °C.
    Fixed(f64),
}

/// Accuracy of a model on a set of profiles, in Kelvin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub targets: Vec<String>,
    /// K²
    pub per_target_mse: Vec<f64>,
    /// Mean of `per_target_mse`, K².
    pub mse: f64,
    /// Largest absolute error over all targets and samples, K.
    pub linf: f64,
    pub parameter_count: usize,
    pub seed: Option<u64>,
    pub fold: String,
    pub samples: usize,
    /// Profiles whose rollout diverged; they are excluded from the scores.
    pub failed_profiles: Vec<String>,
}

/// Initial normalized state for `profile` under `mode`.
pub fn initial_state(model: &TnnModel, profile: &MeasurementProfile, mode: InitMode) -> Result<Vec<f64>> {
    let m = model.topology.targets;
    match mode {
        InitMode::GroundTruth => Ok(profile.targets(0).to_vec()),
        InitMode::Ambient => {
            let first = profile
                .ancillary(0)
                .first()
                .ok_or_else(|| Error::Argument("ambient initialization needs an ancillary channel".into()))?;
            let d_anc = model.schema.ancillary_divisors()?[0];
            Ok(model
                .schema
                .target_divisors()?
                .iter()
                .map(|d| first * d_anc / d)
                .collect())
        }
        InitMode::Fixed(celsius) => {
            let divisors = model.schema.target_divisors()?;
            debug_assert_eq!(divisors.len(), m);
            Ok(divisors.iter().map(|d| celsius / d).collect())
        }
    }
}

/// Squared-error sums, sample count and max error of one trajectory, in Kelvin.
pub(crate) type ProfileErrors = (Vec<f64>, usize, f64);

pub(crate) fn trajectory_errors(traj: &Trajectory, profile: &MeasurementProfile, divisors: &[f64]) -> ProfileErrors {
    let mut sse = vec![0.0; divisors.len()];
    let mut linf = 0.0f64;
    for k in 0..profile.len() {
        for (t, ((e, y), d)) in traj.row(k).iter().zip(profile.targets(k)).zip(divisors).enumerate() {
            let err = (e - y) * d;
            sse[t] += err * err;
            linf = linf.max(err.abs());
        }
    }
    (sse, profile.len(), linf)
}

/// Rolls the model out over every profile and scores the estimates.
pub fn evaluate(model: &TnnModel, profiles: &[MeasurementProfile], init: InitMode) -> Result<EvalReport> {
    if profiles.is_empty() {
        return Err(Error::Argument("no profiles to evaluate".into()));
    }
    let divisors = model.schema.target_divisors()?;
    let runs: Vec<Result<Option<ProfileErrors>>> = profiles
        .par_iter()
        .map(|p| {
            let x0 = initial_state(model, p, init)?;
            match rollout(&model.topology, &model.params, p, &x0) {
                Ok(traj) => Ok(Some(trajectory_errors(&traj, p, &divisors))),
                Err(Error::Divergence { .. } | Error::Numerical { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let m = divisors.len();
    let mut sse = vec![0.0; m];
    let mut samples = 0;
    let mut linf = 0.0f64;
    let mut failed = Vec::new();
    for (p, run) in profiles.iter().zip(runs) {
        match run? {
            Some((s, n, l)) => {
                for (a, b) in sse.iter_mut().zip(s) {
                    *a += b;
                }
                samples += n;
                linf = linf.max(l);
            }
            None => {
                log::warn!("rollout diverged on profile `{}`; excluded from the scores", p.id());
                failed.push(p.id().to_string());
            }
        }
    }
    let per_target_mse: Vec<f64> = if samples > 0 {
        sse.iter().map(|s| s / samples as f64).collect()
    } else {
        vec![f64::NAN; m]
    };
    let mse = per_target_mse.iter().sum::<f64>() / m as f64;
    Ok(EvalReport {
        targets: model.schema.targets.clone(),
        per_target_mse,
        mse,
        linf: if samples > 0 { linf } else { f64::NAN },
        parameter_count: count_parameters(&model.topology),
        seed: None,
        fold: String::new(),
        samples,
        failed_profiles: failed,
    })
}

/// MSE in K² of predicting each target by its mean over `profiles`.
///
/// This is the per-target variance averaged over targets.
pub fn constant_predictor_mse(profiles: &[MeasurementProfile], target_divisors: &[f64]) -> Result<f64> {
    if profiles.is_empty() {
        return Err(Error::Argument("no profiles".into()));
    }
    let m = target_divisors.len();
    let mut total = 0.0;
    for (t, d) in target_divisors.iter().enumerate() {
        let values: Vec<f64> = profiles
            .iter()
            .flat_map(|p| (0..p.len()).map(move |k| p.targets(k)[t] * d))
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        total += values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    }
    Ok(total / m as f64)
}
