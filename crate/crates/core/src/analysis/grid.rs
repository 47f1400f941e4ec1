use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, InitMode};
use crate::data::{ChannelSchema, CvSplit, MeasurementProfile};
use crate::nn::ActivationKind;
use crate::tnn::{count_parameters, Approximator, TnnModel, TnnTopology};
use crate::train::{fit, TrainConfig};
use crate::{Error, Result};

/// `1, 2, 4, .., max` (powers of two not exceeding `max`).
pub fn exponential_units(max: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |u| u.checked_mul(2)).take_while(|u| *u <= max).collect()
}

fn default_layers() -> Vec<usize> {
    vec![1, 2, 3]
}
fn default_units() -> Vec<usize> {
    exponential_units(128)
}
fn default_tanh() -> ActivationKind {
    ActivationKind::Tanh
}
fn default_pi_output() -> ActivationKind {
    ActivationKind::Sigmoid
}
fn default_gamma_output() -> ActivationKind {
    ActivationKind::BiasedElu
}

/// Search space over hidden-layer counts and widths of both approximators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_layers")]
    pub layers: Vec<usize>,
    #[serde(default = "default_units")]
    pub units: Vec<usize>,
    #[serde(default = "default_tanh")]
    pub pi_hidden: ActivationKind,
    #[serde(default = "default_pi_output")]
    pub pi_output: ActivationKind,
    #[serde(default = "default_tanh")]
    pub gamma_hidden: ActivationKind,
    #[serde(default = "default_gamma_output")]
    pub gamma_output: ActivationKind,
    /// Number of candidates drawn without replacement; all when `None`.
    #[serde(default)]
    pub budget: Option<usize>,
    /// Seed of the candidate draw.
    #[serde(default)]
    pub sample_seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            layers: default_layers(),
            units: default_units(),
            pi_hidden: default_tanh(),
            pi_output: default_pi_output(),
            gamma_hidden: default_tanh(),
            gamma_output: default_gamma_output(),
            budget: None,
            sample_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCandidate {
    pub pi_layers: usize,
    pub pi_units: usize,
    pub gamma_layers: usize,
    pub gamma_units: usize,
}

impl GridCandidate {
    pub fn topology(&self, spec: &GridSpec, schema: &ChannelSchema) -> Result<TnnTopology> {
        let pi = Approximator::uniform(self.pi_layers, self.pi_units, spec.pi_hidden, spec.pi_output);
        let gamma = Approximator::uniform(self.gamma_layers, self.gamma_units, spec.gamma_hidden, spec.gamma_output);
        let d = schema.dims();
        TnnTopology::new(d.targets, d.ancillary, d.exogenous, schema.sample_time, &pi, &gamma)
    }
}

/// Candidates selected by `spec`, in deterministic order.
pub fn grid_candidates(spec: &GridSpec) -> Result<Vec<GridCandidate>> {
    if spec.layers.is_empty() || spec.units.is_empty() {
        return Err(Error::Argument("grid needs at least one layer count and one width".into()));
    }
    if spec.layers.contains(&0) || spec.units.contains(&0) {
        return Err(Error::Argument("layer counts and widths must be positive".into()));
    }
    let mut all = Vec::new();
    for &pi_layers in &spec.layers {
        for &pi_units in &spec.units {
            for &gamma_layers in &spec.layers {
                for &gamma_units in &spec.units {
                    all.push(GridCandidate {
                        pi_layers,
                        pi_units,
                        gamma_layers,
                        gamma_units,
                    });
                }
            }
        }
    }
    match spec.budget {
        Some(0) => Err(Error::Argument("grid budget must be positive".into())),
        Some(b) if b < all.len() => {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.sample_seed);
            let mut picked = rand::seq::index::sample(&mut rng, all.len(), b).into_vec();
            picked.sort_unstable();
            Ok(picked.into_iter().map(|i| all[i]).collect())
        }
        _ => Ok(all),
    }
}

/// Outcome of one grid candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub candidate: GridCandidate,
    pub parameter_count: usize,
    /// Mean generalization MSE (K²) over the seeds that trained successfully.
    pub mse: Option<f64>,
    pub seeds_ok: usize,
    pub error: Option<String>,
    pub pareto: bool,
}

/// Flags the points not dominated in (parameter count, MSE).
pub fn pareto_front(points: &[(usize, f64)]) -> Vec<bool> {
    points
        .iter()
        .map(|&(n, e)| {
            !points
                .iter()
                .any(|&(n2, e2)| n2 <= n && e2 <= e && (n2 < n || e2 < e))
        })
        .collect()
}

/// Trains every selected candidate for each seed and scores it on `generalization`.
///
/// Failed trainings are logged and excluded; a candidate with no successful
/// seed carries its last error and is left out of the Pareto set.
pub fn grid_search(
    spec: &GridSpec,
    schema: &ChannelSchema,
    config: &TrainConfig,
    split: &CvSplit,
    generalization: &[MeasurementProfile],
    seeds: &[u64],
) -> Result<Vec<GridPoint>> {
    if seeds.is_empty() {
        return Err(Error::Argument("at least one seed is required".into()));
    }
    if generalization.is_empty() {
        return Err(Error::Argument("generalization set must be non-empty".into()));
    }
    let candidates = grid_candidates(spec)?;
    let mut points: Vec<GridPoint> = candidates
        .par_iter()
        .map(|c| -> Result<GridPoint> {
            let topology = c.topology(spec, schema)?;
            let mut scores = Vec::new();
            let mut error = None;
            for &seed in seeds {
                let cfg = TrainConfig { seed, ..config.clone() };
                let outcome = fit(&topology, split, &cfg)
                    .and_then(|(params, _)| TnnModel::new(topology.clone(), params, schema.clone()))
                    .and_then(|model| evaluate(&model, generalization, InitMode::GroundTruth));
                match outcome {
                    Ok(r) if r.failed_profiles.is_empty() => scores.push(r.mse),
                    Ok(r) => error = Some(format!("diverged on {}", r.failed_profiles.join(", "))),
                    Err(e) => error = Some(e.to_string()),
                }
                if let Some(e) = &error {
                    log::warn!("grid candidate {c:?}, seed {seed}: {e}");
                }
            }
            Ok(GridPoint {
                candidate: *c,
                parameter_count: count_parameters(&topology),
                mse: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
                seeds_ok: scores.len(),
                error: if scores.is_empty() { error } else { None },
                pareto: false,
            })
        })
        .collect::<Result<_>>()?;

    let scored: Vec<usize> = (0..points.len()).filter(|&i| points[i].mse.is_some()).collect();
    let front = pareto_front(
        &scored
            .iter()
            .map(|&i| (points[i].parameter_count, points[i].mse.expect("scored")))
            .collect::<Vec<_>>(),
    );
    for (&i, on) in scored.iter().zip(front) {
        points[i].pareto = on;
    }
    Ok(points)
}
