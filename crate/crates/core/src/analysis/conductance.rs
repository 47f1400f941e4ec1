use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::tnn::{evaluate_thermal_parameters, TnnModel, TnnTopology};
use crate::{Error, Result};

/// Upper end of the uniform input interval used to probe γ.
const PROBE_HIGH: f64 = 1.3;

/// Typical conductance per node pair across a set of trained models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductanceProfile {
    /// `(a, b, name_a, name_b)` per pair slot; nodes are targets then ancillary.
    pub pairs: Vec<(usize, usize, String, String)>,
    /// Median-of-medians γ per slot (normalized units).
    pub medians: Vec<f64>,
    /// Models were admitted when their MSE was below this cutoff.
    pub mse_cutoff: f64,
    pub models_used: usize,
    pub samples: usize,
}

impl ConductanceProfile {
    /// Slots ordered from weakest to strongest median.
    pub fn ranking(&self) -> Vec<usize> {
        let mut slots: Vec<usize> = (0..self.medians.len()).collect();
        slots.sort_by(|&a, &b| self.medians[a].total_cmp(&self.medians[b]).then(a.cmp(&b)));
        slots
    }

    /// Weakest pair that touches at least one state node.
    pub fn weakest(&self, targets: usize) -> Option<usize> {
        self.ranking().into_iter().find(|&s| self.pairs[s].0 < targets)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn node_names(model: &TnnModel) -> Vec<String> {
    model.schema.targets.iter().chain(&model.schema.ancillary).cloned().collect()
}

/// Median γ per pair over uniform `[0, 1.3]` inputs, then the median over models.
///
/// Only models with `mse < mse_cutoff` take part. The same input samples,
/// drawn from `seed`, are shared by every model, and are applied to both the
/// state and the feature inputs of γ.
pub fn conductance_medians(
    models: &[(&TnnModel, f64)],
    mse_cutoff: f64,
    samples: usize,
    seed: u64,
) -> Result<ConductanceProfile> {
    if samples == 0 {
        return Err(Error::Argument("at least one input sample is required".into()));
    }
    let admitted: Vec<&TnnModel> = models.iter().filter(|(_, mse)| *mse < mse_cutoff).map(|(m, _)| *m).collect();
    let Some(first) = admitted.first() else {
        return Err(Error::EmptySelection(format!(
            "none of {} models has MSE below {mse_cutoff}",
            models.len()
        )));
    };
    let topo = &first.topology;
    for m in &admitted {
        let t = &m.topology;
        if (t.targets, t.ancillary, t.exogenous) != (topo.targets, topo.ancillary, topo.exogenous) {
            return Err(Error::Shape("models disagree on the number of nodes or inputs".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .map(|_| {
            let state = (0..topo.targets).map(|_| rng.random_range(0.0..=PROBE_HIGH)).collect();
            let features = (0..topo.features()).map(|_| rng.random_range(0.0..=PROBE_HIGH)).collect();
            (state, features)
        })
        .collect();

    let pairs = topo.pairs();
    let mut per_model: Vec<Vec<f64>> = vec![Vec::with_capacity(admitted.len()); pairs.len()];
    for model in &admitted {
        let mut outputs: Vec<Vec<f64>> = vec![Vec::with_capacity(samples); pairs.len()];
        for (state, features) in &inputs {
            let th = evaluate_thermal_parameters(&model.topology, &model.params, state, features)?;
            for (slot, g) in th.gamma.iter().enumerate() {
                outputs[slot].push(*g);
            }
        }
        for (slot, mut values) in outputs.into_iter().enumerate() {
            per_model[slot].push(median(&mut values));
        }
    }
    let names = node_names(first);
    Ok(ConductanceProfile {
        pairs: pairs
            .pairs()
            .map(|(a, b)| (a, b, names[a].clone(), names[b].clone()))
            .collect(),
        medians: per_model.iter_mut().map(|v| median(v)).collect(),
        mse_cutoff,
        models_used: admitted.len(),
        samples,
    })
}

#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub topology: TnnTopology,
    /// Slots newly added to the mask.
    pub pruned: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Masks every pair whose median conductance lies strictly below `threshold`.
///
/// Existing mask entries are kept. The returned topology is meant to be
/// trained from scratch.
pub fn prune(topology: &TnnTopology, profile: &ConductanceProfile, threshold: f64) -> Result<PruneOutcome> {
    if !(threshold >= 0.0) {
        return Err(Error::Argument(format!("prune threshold must be non-negative, got {threshold}")));
    }
    let pairs = topology.pairs();
    if profile.medians.len() != pairs.len() {
        return Err(Error::Shape(format!(
            "conductance profile has {} pairs, topology has {}",
            profile.medians.len(),
            pairs.len()
        )));
    }
    let pruned: Vec<usize> = (0..pairs.len())
        .filter(|s| profile.medians[*s] < threshold && !topology.mask.contains(s))
        .collect();
    let mut mask = topology.mask.clone();
    mask.extend(&pruned);
    let mut warnings = Vec::new();
    for i in 0..topology.targets {
        let all_masked = (0..pairs.nodes())
            .filter_map(|j| pairs.slot(i, j))
            .all(|s| mask.contains(&s));
        if all_masked {
            let name = profile
                .pairs
                .iter()
                .find_map(|(a, b, na, nb)| {
                    if *a == i {
                        Some(na.clone())
                    } else if *b == i {
                        Some(nb.clone())
                    } else {
                        None
                    }
                })
                .unwrap_or_else(|| format!("node {i}"));
            let msg = format!("all conductances of `{name}` are pruned; it only integrates its own losses");
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(PruneOutcome {
        topology: topology.clone().with_mask(mask)?,
        pruned,
        warnings,
    })
}
