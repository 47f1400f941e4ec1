use std::ops::Range;

use super::cell::{cell_step, check_bound, check_profile, evaluate_cached, node_flow, StepCache, ThermalParameters};
use super::params::TnnParameters;
use super::topology::TnnTopology;
use crate::data::MeasurementProfile;
use crate::nn::{add_l2_gradient, backward_into, l2_penalty};
use crate::{Error, Result};

/// Loss and gradients of one truncated-BPTT window.
#[derive(Debug, Clone)]
pub struct WindowGradients {
    /// Mean squared error over the predicted samples and all targets.
    pub loss: f64,
    /// ℓ2 penalty of both approximators (added once per window).
    pub penalty: f64,
    /// Gradient of `loss + penalty`.
    pub grads: TnnParameters,
    /// Estimated state at the last sample of the window.
    pub final_state: Vec<f64>,
}

/// Truncated BPTT over samples `range` of `profile`.
///
/// The window starts from `initial` (a constant: no gradient flows past the
/// window boundary) and predicts samples `start+1 .. end`, which are scored
/// against the profile's targets.
pub fn tbptt_gradients(
    topology: &TnnTopology,
    params: &TnnParameters,
    profile: &MeasurementProfile,
    range: Range<usize>,
    initial: &[f64],
) -> Result<WindowGradients> {
    let len = range.end.saturating_sub(range.start);
    if len < 2 {
        return Err(Error::Argument(format!("TBPTT window of {len} samples; at least 2 are required")));
    }
    if range.end > profile.len() {
        return Err(Error::Argument(format!(
            "window {range:?} exceeds profile length {}",
            profile.len()
        )));
    }
    check_profile(topology, profile)?;
    params.check_shapes(topology)?;
    let m = topology.targets;
    if initial.len() != m {
        return Err(Error::Shape(format!("initial state has {} entries, expected {m}", initial.len())));
    }

    let kappa = params.kappa();
    let ts = topology.sample_time;

    // forward
    let mut states: Vec<Vec<f64>> = Vec::with_capacity(len);
    let mut steps: Vec<(ThermalParameters, StepCache)> = Vec::with_capacity(len - 1);
    states.push(initial.to_vec());
    for k in range.start..range.end - 1 {
        let state = states.last().expect("non-empty");
        let (thermal, cache) = evaluate_cached(topology, params, &kappa, state, profile.features(k))?;
        let next = cell_step(topology, k, state, profile.ancillary(k), &thermal)?;
        check_bound(topology, &next, k + 1)?;
        states.push(next);
        steps.push((thermal, cache));
    }

    let scale = 1.0 / ((len - 1) * m) as f64;
    let mut loss = 0.0;
    for (offset, state) in states.iter().enumerate().skip(1) {
        let target = profile.targets(range.start + offset);
        loss += state.iter().zip(target).map(|(e, t)| (e - t).powi(2)).sum::<f64>();
    }
    loss *= scale;

    // reverse
    let mut grads = TnnParameters::zeros(topology);
    let idx = topology.pairs();
    let ln10 = std::f64::consts::LN_10;
    let mut d_next: Vec<f64> = loss_grad(&states[len - 1], profile.targets(range.end - 1), scale);
    for offset in (0..len - 1).rev() {
        let k = range.start + offset;
        let state = &states[offset];
        let ancillary = profile.ancillary(k);
        let (thermal, cache) = &steps[offset];

        let mut d_state = d_next.clone();
        let mut d_pi = vec![0.0; m];
        let mut d_gamma = vec![0.0; idx.len()];
        for i in 0..m {
            let flow = node_flow(topology, i, state, ancillary, thermal);
            let g = d_next[i];
            grads.theta_c[i] += g * ts * flow * kappa[i] * ln10;
            let d_flow = g * ts * kappa[i];
            d_pi[i] += d_flow;
            for j in 0..m {
                if let Some(slot) = idx.slot(i, j) {
                    d_gamma[slot] += d_flow * (state[j] - state[i]);
                    let gij = thermal.gamma[slot];
                    d_state[j] += d_flow * gij;
                    d_state[i] -= d_flow * gij;
                }
            }
            for (a, &ta) in ancillary.iter().enumerate() {
                let slot = idx.slot(i, m + a).expect("ancillary node in range");
                d_gamma[slot] += d_flow * (ta - state[i]);
                d_state[i] -= d_flow * thermal.gamma[slot];
            }
        }

        // through |·| and the mask
        let d_pi_raw: Vec<f64> = d_pi.iter().zip(&cache.pi_raw).map(|(d, r)| d * sign(*r)).collect();
        let mut d_gamma_raw: Vec<f64> = d_gamma.iter().zip(&cache.gamma_raw).map(|(d, r)| d * sign(*r)).collect();
        for &slot in &topology.mask {
            d_gamma_raw[slot] = 0.0;
        }

        let per_branch = topology.pi.output_width();
        for (b, (branch, branch_cache)) in params.pi.iter().zip(&cache.pi).enumerate() {
            let dy = &d_pi_raw[b * per_branch..(b + 1) * per_branch];
            let (ds, _) = backward_into(&topology.pi, branch, branch_cache, dy, &mut grads.pi[b])?;
            add_into(&mut d_state, &ds);
        }
        if let Some(gamma_cache) = &cache.gamma {
            let (ds, _) = backward_into(&topology.gamma, &params.gamma, gamma_cache, &d_gamma_raw, &mut grads.gamma)?;
            add_into(&mut d_state, &ds);
        }

        if offset > 0 {
            let lg = loss_grad(state, profile.targets(k), scale);
            add_into(&mut d_state, &lg);
        }
        d_next = d_state;
    }

    let mut penalty = 0.0;
    for (branch, g) in params.pi.iter().zip(grads.pi.iter_mut()) {
        penalty += l2_penalty(&topology.pi, branch);
        add_l2_gradient(&topology.pi, branch, g);
    }
    penalty += l2_penalty(&topology.gamma, &params.gamma);
    add_l2_gradient(&topology.gamma, &params.gamma, &mut grads.gamma);

    Ok(WindowGradients {
        loss,
        penalty,
        grads,
        final_state: states.pop().expect("non-empty"),
    })
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn loss_grad(state: &[f64], target: &[f64], scale: f64) -> Vec<f64> {
    state.iter().zip(target).map(|(e, t)| 2.0 * scale * (e - t)).collect()
}

fn add_into(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += b;
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ProfileDims;
    use crate::nn::ActivationKind::{self, *};
    use crate::nn::LayerSpec;
    use crate::tnn::{rollout, Approximator};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_profile(rng: &mut ChaCha8Rng, dims: ProfileDims, len: usize) -> MeasurementProfile {
        let values = (0..len * dims.width()).map(|_| rng.random_range(0.0..1.2)).collect();
        MeasurementProfile::new("r", dims, values).unwrap()
    }

    /// Window objective evaluated through `rollout` only.
    fn objective(t: &TnnTopology, p: &TnnParameters, prof: &MeasurementProfile, init: &[f64]) -> f64 {
        let traj = rollout(t, p, prof, init).unwrap();
        let m = t.targets;
        let mut sum = 0.0;
        for k in 1..prof.len() {
            for (e, y) in traj.row(k).iter().zip(prof.targets(k)) {
                sum += (e - y).powi(2);
            }
        }
        let mut penalty = 0.0;
        for b in &p.pi {
            penalty += l2_penalty(&t.pi, b);
        }
        penalty += l2_penalty(&t.gamma, &p.gamma);
        sum / ((prof.len() - 1) * m) as f64 + penalty
    }

    fn check_fd(t: &TnnTopology, p: &TnnParameters, prof: &MeasurementProfile, init: &[f64]) {
        let wg = tbptt_gradients(t, p, prof, 0..prof.len(), init).unwrap();
        let analytic = wg.grads.to_flat();
        let base = p.to_flat();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut plus = p.clone();
            let mut v = base.clone();
            v[i] += h;
            plus.set_flat(&v).unwrap();
            let mut minus = p.clone();
            v[i] -= 2.0 * h;
            minus.set_flat(&v).unwrap();
            let fd = (objective(t, &plus, prof, init) - objective(t, &minus, prof, init)) / (2.0 * h);
            let a = analytic[i];
            assert!(
                (a - fd).abs() <= 1e-4 * a.abs().max(fd.abs()) + 1e-8,
                "param {i}: analytic {a} vs fd {fd}"
            );
        }
    }

    #[test]
    fn five_step_window_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Approximator::new(vec![], Sigmoid);
        let mut t = TnnTopology::new(2, 1, 1, 0.5, &a, &Approximator::new(vec![], BiasedElu)).unwrap();
        t.pi.layers[0].l2 = 1e-3;
        t.gamma.layers[0].l2 = 2e-3;
        let p = TnnParameters::init(&t, 4, -0.5);
        let dims = ProfileDims { ancillary: 1, exogenous: 1, targets: 2 };
        let prof = random_profile(&mut rng, dims, 5);
        check_fd(&t, &p, &prof, &[0.3, 0.7]);
    }

    #[test]
    fn deeper_networks_and_branches_match_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..6 {
            let acts: Vec<ActivationKind> = (0..3).map(|_| ActivationKind::ALL[rng.random_range(0..6)]).collect();
            let pi = Approximator::new(vec![LayerSpec::new(3, acts[0])], acts[1]);
            let gamma = Approximator::new(vec![LayerSpec::new(2, acts[2]), LayerSpec::new(2, Tanh)], Sigmoid);
            let mut t = TnnTopology::new(3, 1, 1, 0.5, &pi, &gamma).unwrap();
            if trial % 2 == 0 {
                t = t.with_dedicated_branches(&pi).unwrap();
            }
            if trial % 3 == 0 {
                t = t.with_mask([1, 4]).unwrap();
            }
            let p = TnnParameters::init(&t, trial, -0.7);
            let dims = ProfileDims { ancillary: 1, exogenous: 1, targets: 3 };
            let prof = random_profile(&mut rng, dims, 6);
            check_fd(&t, &p, &prof, &[0.2, 0.5, 0.9]);
        }
    }

    #[test]
    fn perfect_prediction_gives_zero_loss() {
        let a = Approximator::uniform(1, 2, Tanh, Linear);
        let t = TnnTopology::new(2, 1, 1, 0.5, &a, &a).unwrap();
        let p = TnnParameters::init(&t, 3, -1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dims = ProfileDims { ancillary: 1, exogenous: 1, targets: 2 };
        let prof = random_profile(&mut rng, dims, 8);
        let init = prof.targets(0).to_vec();
        let traj = rollout(&t, &p, &prof, &init).unwrap();
        // replace targets by the model's own estimates
        let mut values = prof.values().to_vec();
        for k in 0..prof.len() {
            values[k * 4 + 2..k * 4 + 4].copy_from_slice(traj.row(k));
        }
        let perfect = MeasurementProfile::new("p", dims, values).unwrap();
        let wg = tbptt_gradients(&t, &p, &perfect, 0..8, &init).unwrap();
        assert_eq!(wg.loss, 0.0);
        assert!(wg.grads.to_flat().iter().all(|&g| g == 0.0));

        // doubling every error quadruples the loss
        let mut doubled = perfect.values().to_vec();
        let mut shifted = perfect.values().to_vec();
        for k in 1..8 {
            for j in 2..4 {
                shifted[k * 4 + j] += 0.01 * (k + j) as f64;
                doubled[k * 4 + j] += 0.02 * (k + j) as f64;
            }
        }
        let l1 = tbptt_gradients(&t, &p, &MeasurementProfile::new("a", dims, shifted).unwrap(), 0..8, &init).unwrap().loss;
        let l2 = tbptt_gradients(&t, &p, &MeasurementProfile::new("b", dims, doubled).unwrap(), 0..8, &init).unwrap().loss;
        assert!((l2 - 4.0 * l1).abs() <= 1e-12 * l2);
    }

    #[test]
    fn short_window_rejected() {
        let a = Approximator::uniform(1, 2, Tanh, Linear);
        let t = TnnTopology::new(1, 0, 1, 0.5, &a, &a).unwrap();
        let p = TnnParameters::init(&t, 3, -1.0);
        let dims = ProfileDims { ancillary: 0, exogenous: 1, targets: 1 };
        let prof = MeasurementProfile::new("s", dims, vec![0.0; 6]).unwrap();
        assert!(matches!(tbptt_gradients(&t, &p, &prof, 1..2, &[0.0]), Err(Error::Argument(_))));
    }
}
