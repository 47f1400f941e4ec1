use super::params::TnnParameters;
use super::topology::TnnTopology;
use crate::data::MeasurementProfile;
use crate::nn::{mlp_forward, MlpCache};
use crate::{Error, Result};

/// κ, π and γ at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalParameters {
    pub kappa: Vec<f64>,
    pub pi: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Forward intermediates of one step, kept for the reverse pass.
pub(crate) struct StepCache {
    pub pi: Vec<MlpCache>,
    /// `None` when there are no node pairs
    pub gamma: Option<MlpCache>,
    /// network outputs before the absolute value
    pub pi_raw: Vec<f64>,
    pub gamma_raw: Vec<f64>,
}

pub(crate) fn evaluate_cached(
    topology: &TnnTopology,
    params: &TnnParameters,
    kappa: &[f64],
    state: &[f64],
    features: &[f64],
) -> Result<(ThermalParameters, StepCache)> {
    let mut pi_raw = Vec::with_capacity(topology.targets);
    let mut pi_caches = Vec::with_capacity(params.pi.len());
    for branch in &params.pi {
        let (out, cache) = mlp_forward(&topology.pi, branch, state, features)?;
        pi_raw.extend_from_slice(&out);
        pi_caches.push(cache);
    }
    let (gamma_raw, gamma_cache) = if topology.gamma.layers.is_empty() {
        (Vec::new(), None)
    } else {
        let (out, cache) = mlp_forward(&topology.gamma, &params.gamma, state, features)?;
        (out, Some(cache))
    };
    let mut gamma: Vec<f64> = gamma_raw.iter().map(|g| g.abs()).collect();
    for &slot in &topology.mask {
        gamma[slot] = 0.0;
    }
    let thermal = ThermalParameters {
        kappa: kappa.to_vec(),
        pi: pi_raw.iter().map(|p| p.abs()).collect(),
        gamma,
    };
    let cache = StepCache {
        pi: pi_caches,
        gamma: gamma_cache,
        pi_raw,
        gamma_raw,
    };
    Ok((thermal, cache))
}

/// κ = 10^θ_c, π = |MLP_π(ϑ̂, φ)|, γ = |MLP_γ(ϑ̂, φ)| with masked slots set to 0.
///
/// `features` is φ = [ϑ̃; ξ].
pub fn evaluate_thermal_parameters(
    topology: &TnnTopology,
    params: &TnnParameters,
    state: &[f64],
    features: &[f64],
) -> Result<ThermalParameters> {
    params.check_shapes(topology)?;
    if state.len() != topology.targets || features.len() != topology.features() {
        return Err(Error::Shape(format!(
            "expected state {} / features {}, got {} / {}",
            topology.targets,
            topology.features(),
            state.len(),
            features.len()
        )));
    }
    let kappa: Vec<f64> = params.kappa().iter().map(|k| k.abs()).collect();
    evaluate_cached(topology, params, &kappa, state, features).map(|(t, _)| t)
}

/// Heat-flow sum `π_i + Σ_j (ϑ̂_j − ϑ̂_i)γ_ij + Σ_a (ϑ̃_a − ϑ̂_i)γ_ia` for node `i`.
#[inline]
pub(crate) fn node_flow(topology: &TnnTopology, i: usize, state: &[f64], ancillary: &[f64], th: &ThermalParameters) -> f64 {
    let idx = topology.pairs();
    let m = topology.targets;
    let xi = state[i];
    let mut s = th.pi[i];
    for (j, &xj) in state.iter().enumerate() {
        if let Some(slot) = idx.slot(i, j) {
            s += (xj - xi) * th.gamma[slot];
        }
    }
    for (a, &ta) in ancillary.iter().enumerate() {
        let slot = idx.slot(i, m + a).expect("ancillary node in range");
        s += (ta - xi) * th.gamma[slot];
    }
    s
}

/// One explicit Euler step of the TNN at time index `k`.
pub fn cell_step(
    topology: &TnnTopology,
    k: usize,
    state: &[f64],
    ancillary: &[f64],
    thermal: &ThermalParameters,
) -> Result<Vec<f64>> {
    let m = topology.targets;
    if state.len() != m
        || ancillary.len() != topology.ancillary
        || thermal.kappa.len() != m
        || thermal.pi.len() != m
        || thermal.gamma.len() != topology.pairs().len()
    {
        return Err(Error::Shape("cell step inputs do not match the topology".into()));
    }
    let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
    if !(finite(state) && finite(ancillary) && finite(&thermal.kappa) && finite(&thermal.pi) && finite(&thermal.gamma)) {
        return Err(Error::Numerical {
            context: "cell step input".into(),
            step: k,
        });
    }
    let ts = topology.sample_time;
    let next: Vec<f64> = (0..m)
        .map(|i| state[i] + ts * thermal.kappa[i] * node_flow(topology, i, state, ancillary, thermal))
        .collect();
    if !finite(&next) {
        return Err(Error::Numerical {
            context: "cell step output".into(),
            step: k,
        });
    }
    Ok(next)
}

/// Estimated temperatures over a profile, `len × width`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub width: usize,
    pub values: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.width..(k + 1) * self.width]
    }
}

pub(crate) fn check_profile(topology: &TnnTopology, profile: &MeasurementProfile) -> Result<()> {
    let d = profile.dims();
    if d.targets != topology.targets || d.ancillary != topology.ancillary || d.exogenous != topology.exogenous {
        return Err(Error::Shape(format!(
            "profile `{}` has (m, n, o) = ({}, {}, {}), topology expects ({}, {}, {})",
            profile.id(),
            d.targets,
            d.ancillary,
            d.exogenous,
            topology.targets,
            topology.ancillary,
            topology.exogenous
        )));
    }
    Ok(())
}

pub(crate) fn check_bound(topology: &TnnTopology, state: &[f64], step: usize) -> Result<()> {
    let magnitude = state.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if magnitude > topology.divergence_bound {
        return Err(Error::Divergence {
            step,
            magnitude,
            bound: topology.divergence_bound,
        });
    }
    Ok(())
}

/// Runs the cell over the whole profile starting from `initial`.
///
/// Row 0 of the result is `initial`; row k+1 uses κ, π, γ evaluated at step k.
pub fn rollout(
    topology: &TnnTopology,
    params: &TnnParameters,
    profile: &MeasurementProfile,
    initial: &[f64],
) -> Result<Trajectory> {
    topology.validate()?;
    params.check_shapes(topology)?;
    check_profile(topology, profile)?;
    if initial.len() != topology.targets {
        return Err(Error::Shape(format!(
            "initial state has {} entries, expected {}",
            initial.len(),
            topology.targets
        )));
    }
    let kappa = params.kappa();
    let mut values = Vec::with_capacity(profile.len() * topology.targets);
    values.extend_from_slice(initial);
    let mut state = initial.to_vec();
    check_bound(topology, &state, 0)?;
    for k in 0..profile.len() - 1 {
        let (thermal, _) = evaluate_cached(topology, params, &kappa, &state, profile.features(k))?;
        state = cell_step(topology, k, &state, profile.ancillary(k), &thermal)?;
        check_bound(topology, &state, k + 1)?;
        values.extend_from_slice(&state);
    }
    Ok(Trajectory {
        width: topology.targets,
        values,
    })
}
