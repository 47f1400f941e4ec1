//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the criteria share the
//! expensive trained model and report in a fixed order.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use tnn_core::analysis::{
    conductance_medians, constant_predictor_mse, detuned_init_study, evaluate, grid_candidates, GridSpec, InitMode,
    DEFAULT_BAND,
};
use tnn_core::data::{
    ingest_csv, make_folds, ChannelSchema, CvIteration, CvSplit, FoldPlan, FoldSets, MeasurementProfile, ProfileDims,
};
use tnn_core::nn::{ActivationKind, LayerSpec};
use tnn_core::plant::{
    default_fold_plan, default_plant, simulate, simulate_dataset, ConductanceFn, Excitation, LossFn, PlantSpec,
    DEFAULT_DISCONNECTED_PAIR,
};
use tnn_core::tnn::{
    cell_step, count_parameters, rollout, tbptt_gradients, Approximator, ThermalParameters, TnnModel, TnnParameters,
    TnnTopology,
};
use tnn_core::train::{fit, TrainConfig};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

// ---------------------------------------------------------------------------
// 1. gradient oracle

/// Window loss plus ℓ2 penalty, computed from the forward pass only.
fn window_objective(
    topology: &TnnTopology,
    params: &TnnParameters,
    profile: &MeasurementProfile,
    start: usize,
    end: usize,
    initial: &[f64],
) -> f64 {
    let window = profile.slice("w", start, end).unwrap();
    let traj = rollout(topology, params, &window, initial).unwrap();
    let m = topology.targets;
    let mut sse = 0.0;
    for k in 1..window.len() {
        for (e, y) in traj.row(k).iter().zip(window.targets(k)) {
            sse += (e - y) * (e - y);
        }
    }
    let mut penalty = 0.0;
    let mlps = params
        .pi
        .iter()
        .map(|p| (p, &topology.pi))
        .chain(std::iter::once((&params.gamma, &topology.gamma)));
    for (p, spec) in mlps {
        if let Some(r) = &p.recurrent {
            penalty += spec.layers[0].l2 * r.data.iter().map(|w| w * w).sum::<f64>();
        }
        for (layer, ls) in p.layers.iter().zip(&spec.layers) {
            penalty += ls.l2 * layer.weights.data.iter().map(|w| w * w).sum::<f64>();
        }
    }
    sse / ((window.len() - 1) * m) as f64 + penalty
}

fn random_approximator(rng: &mut ChaCha8Rng, acts: &mut impl Iterator<Item = ActivationKind>) -> Approximator {
    let depth = rng.random_range(1..=2);
    let hidden = (0..depth)
        .map(|_| LayerSpec::new(rng.random_range(1..=3), acts.next().unwrap()).with_l2(rng.random_range(0.0..1e-2)))
        .collect();
    let mut a = Approximator::new(hidden, acts.next().unwrap());
    a.output_l2 = rng.random_range(0.0..1e-2);
    a
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut acts = ActivationKind::ALL.iter().copied().cycle();
    let mut used = BTreeSet::new();
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    for case in 0..20 {
        let m = rng.random_range(1..=3);
        let n = rng.random_range(0..=2);
        let o = rng.random_range(0..=1);
        let pi = random_approximator(&mut rng, &mut acts);
        let gamma = random_approximator(&mut rng, &mut acts);
        for a in pi.hidden.iter().chain(&gamma.hidden) {
            used.insert(format!("{:?}", a.activation));
        }
        used.insert(format!("{:?}", pi.output));
        used.insert(format!("{:?}", gamma.output));
        let mut topology = TnnTopology::new(m, n, o, 0.5, &pi, &gamma).unwrap();
        if case % 3 == 1 {
            topology = topology.with_dedicated_branches(&pi).unwrap();
        }
        let len = rng.random_range(2..=8);
        let total = len + 3;
        let dims = ProfileDims {
            ancillary: n,
            exogenous: o,
            targets: m,
        };
        let values = (0..total * dims.width()).map(|_| rng.random_range(0.0..1.0)).collect();
        let profile = MeasurementProfile::new(format!("case{case}"), dims, values).unwrap();
        let theta = rng.random_range(-2.0..-0.5);
        let params = TnnParameters::init(&topology, rng.random(), theta);
        let initial: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let start = rng.random_range(0..=total - len);

        let analytic = tbptt_gradients(&topology, &params, &profile, start..start + len, &initial)
            .unwrap()
            .grads
            .to_flat();
        let flat = params.to_flat();
        let scale = analytic.iter().fold(1.0f64, |a, g| a.max(g.abs()));
        let h = 1e-6;
        let mut probe = params.clone();
        for i in 0..flat.len() {
            let mut v = flat.clone();
            v[i] = flat[i] + h;
            probe.set_flat(&v).unwrap();
            let up = window_objective(&topology, &probe, &profile, start, start + len, &initial);
            v[i] = flat[i] - h;
            probe.set_flat(&v).unwrap();
            let down = window_objective(&topology, &probe, &profile, start, start + len, &initial);
            let fd = (up - down) / (2.0 * h);
            // entries smaller than 1e-3 of the largest one are judged relative to that level
            let rel = (analytic[i] - fd).abs() / analytic[i].abs().max(fd.abs()).max(1e-3 * scale);
            worst = worst.max(rel);
            compared += 1;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        worst <= 1e-4 && used.len() == 6 && elapsed < 60.0,
        format!(
            "20 instances, {compared} partials, worst rel. error {worst:.2e} (tol 1e-4), {} activations, {elapsed:.1} s",
            used.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. cell-update exactness

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = Approximator::uniform(1, 1, ActivationKind::Linear, ActivationKind::Linear);
    let mut fixed_ok = 0;
    let mut worst_conservation = 0.0f64;
    let cases = 10_000;
    for k in 0..cases {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(0..=3);
        let topo = TnnTopology::new(m, n, 0, 0.5, &a, &a).unwrap();
        let pairs = topo.pairs().len();
        let th = |rng: &mut ChaCha8Rng, pi: bool| ThermalParameters {
            kappa: (0..m).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect(),
            pi: (0..m).map(|_| if pi { rng.random_range(0.0..1.0) } else { 0.0 }).collect(),
            gamma: (0..pairs).map(|_| rng.random_range(0.0..2.0)).collect(),
        };

        // zero flow: all temperatures equal and no losses → bitwise fixed point
        let level = rng.random_range(-1.0..1.5);
        let state = vec![level; m];
        let next = cell_step(&topo, k, &state, &vec![level; n], &th(&mut rng, false)).unwrap();
        if next == state {
            fixed_ok += 1;
        }

        // conservation: without ancillary nodes and losses Σ ϑ_i/κ_i is invariant
        let topo0 = TnnTopology::new(m, 0, 0, 0.5, &a, &a).unwrap();
        let pairs0 = topo0.pairs().len();
        let mut t = th(&mut rng, false);
        t.gamma.truncate(pairs0);
        let state: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.3)).collect();
        let next = cell_step(&topo0, k, &state, &[], &t).unwrap();
        let weighted = |x: &[f64]| x.iter().zip(&t.kappa).map(|(v, c)| v / c).sum::<f64>();
        let magnitude = state.iter().zip(&t.kappa).map(|(v, c)| v.abs() / c).sum::<f64>();
        let drift = (weighted(&next) - weighted(&state)).abs() / magnitude.max(1.0);
        worst_conservation = worst_conservation.max(drift);
    }
    let elapsed = started.elapsed().as_secs_f64();
    let eps = f64::EPSILON;
    verdict(
        fixed_ok == cases && worst_conservation <= 64.0 * eps && elapsed < 10.0,
        format!(
            "fixed point exact in {fixed_ok}/{cases}, worst relative conservation drift {:.1} ulp, {elapsed:.2} s",
            worst_conservation / eps
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. plant oracle

fn lag_plant(g: f64, c: f64, ambient: f64, start: f64, substeps: usize) -> PlantSpec {
    PlantSpec {
        schema: ChannelSchema::new(&[], &["coolant"], &["node"], 1.0).unwrap(),
        capacitances: vec![c],
        conductances: vec![ConductanceFn::Constant { value: g }],
        losses: vec![LossFn::Constant { value: 0.0 }],
        excitation: vec![Excitation::constant("coolant", ambient)],
        initial: vec![[start, start]],
        substeps,
    }
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let (g, c, amb, start) = (0.05, 2.0, 0.2, 0.9);
    let d = simulate(&lag_plant(g, c, amb, start, 100), 200.0, 1.0, 0).unwrap();
    let p = &d.profiles[0];
    let worst = (0..p.len())
        .map(|k| {
            let exact = amb + (start - amb) * (-g * k as f64 / c).exp();
            (p.targets(k)[0] - exact).abs() / (start - amb)
        })
        .fold(0.0, f64::max);

    let mut spec = default_plant();
    spec.substeps = 512;
    let reference = simulate(&spec, 600.0, 0.5, 3).unwrap().profiles.remove(0);
    let mut errors = Vec::new();
    for substeps in [1usize, 2, 4, 8] {
        spec.substeps = substeps;
        let p = simulate(&spec, 600.0, 0.5, 3).unwrap().profiles.remove(0);
        let err = (0..p.len())
            .flat_map(|k| {
                p.targets(k)
                    .iter()
                    .zip(reference.targets(k))
                    .map(|(a, b)| (a - b).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let elapsed = started.elapsed().as_secs_f64();
    verdict(
        worst <= 0.01 && min_order >= 0.9 && elapsed < 10.0,
        format!(
            "max deviation from exponential {:.3}% of initial gap, Euler orders {:?}, {elapsed:.2} s",
            100.0 * worst,
            orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
        ),
    )
}

// ---------------------------------------------------------------------------
// 4–6. identification on the default plant

struct PlantSetup {
    schema: ChannelSchema,
    folds: FoldSets,
    split: CvSplit,
    topology: TnnTopology,
    config: TrainConfig,
    baseline: f64,
}

fn plant_setup() -> PlantSetup {
    // 8 profiles × 15 min = 2 h at T_s = 0.5 s
    let data = simulate_dataset(&default_plant(), 8, 900.0, 0.5, 0).unwrap();
    let folds = make_folds(&data.profiles, &default_fold_plan()).unwrap();
    let split = folds.split(CvIteration::First);
    let pi = Approximator::uniform(1, 4, ActivationKind::Tanh, ActivationKind::Sigmoid);
    let gamma = Approximator::uniform(1, 4, ActivationKind::Tanh, ActivationKind::BiasedElu);
    let d = data.schema.dims();
    let topology = TnnTopology::new(d.targets, d.ancillary, d.exogenous, 0.5, &pi, &gamma).unwrap();
    let config = TrainConfig {
        learning_rate: 1e-2,
        tbptt_len: 64,
        max_epochs: 100,
        patience: 100,
        ..Default::default()
    };
    let baseline = constant_predictor_mse(&folds.generalization, &data.schema.target_divisors().unwrap()).unwrap();
    PlantSetup {
        schema: data.schema,
        folds,
        split,
        topology,
        config,
        baseline,
    }
}

fn criterion_4(setup: &PlantSetup) -> (Outcome, Option<TnnModel>) {
    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let result = pool.install(|| fit(&setup.topology, &setup.split, &setup.config));
    let elapsed = started.elapsed().as_secs_f64();
    let (params, report) = match result {
        Ok(r) => r,
        Err(e) => return (Outcome::Fail(format!("training failed: {e}")), None),
    };
    let model = TnnModel::new(setup.topology.clone(), params, setup.schema.clone()).unwrap();
    let eval = evaluate(&model, &setup.folds.generalization, InitMode::GroundTruth).unwrap();
    let count = count_parameters(&setup.topology);
    let ratio = eval.mse / setup.baseline;
    let ok = count <= 200
        && report.stopped_epoch <= 100
        && eval.failed_profiles.is_empty()
        && ratio <= 0.10
        && elapsed <= 600.0;
    (
        verdict(
            ok,
            format!(
                "{count} parameters, {} epochs (best {}), generalization MSE {:.2} K² = {:.1}% of baseline variance {:.1} K², \
                 ℓ∞ {:.1} K, {elapsed:.1} s on one core",
                report.stopped_epoch,
                report.best_epoch,
                eval.mse,
                100.0 * ratio,
                setup.baseline,
                eval.linf
            ),
        ),
        Some(model),
    )
}

fn criterion_5(setup: &PlantSetup) -> Outcome {
    let started = Instant::now();
    let (a, b) = DEFAULT_DISCONNECTED_PAIR;
    let slot = setup.topology.pairs().slot(a, b).unwrap();
    let pruned = setup.topology.clone().with_mask([slot]).unwrap();
    let cutoff = 0.1 * setup.baseline;
    type SeedRun = Result<(Option<usize>, f64, f64), String>;
    let runs: Vec<SeedRun> = (0..10u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = TrainConfig {
                seed,
                ..setup.config.clone()
            };
            let (params, full) = fit(&setup.topology, &setup.split, &cfg).map_err(|e| e.to_string())?;
            let model = TnnModel::new(setup.topology.clone(), params, setup.schema.clone()).unwrap();
            let mse = evaluate(&model, &setup.folds.generalization, InitMode::GroundTruth).unwrap().mse;
            let weakest = conductance_medians(&[(&model, mse)], cutoff, 1000, seed)
                .ok()
                .and_then(|p| p.weakest(setup.topology.targets));
            let (_, reduced) = fit(&pruned, &setup.split, &cfg).map_err(|e| e.to_string())?;
            Ok((weakest, full.best_val_mse, reduced.best_val_mse))
        })
        .collect();
    let mut hits = 0;
    let (mut full, mut reduced) = (0.0, 0.0);
    for r in &runs {
        match r {
            Ok((w, f, p)) => {
                hits += usize::from(*w == Some(slot));
                full += f;
                reduced += p;
            }
            Err(e) => return Outcome::Fail(format!("training failed: {e}")),
        }
    }
    let change = (reduced - full) / full;
    verdict(
        hits >= 8 && change.abs() <= 0.2,
        format!(
            "disconnected pair ranked weakest in {hits}/10 seeds; pruning it changes mean validation MSE by {:+.1}%, {:.1} s",
            100.0 * change,
            started.elapsed().as_secs_f64()
        ),
    )
}

/// First-order lag: exact TNN for `lag_plant` (κ = 1/C, γ = g, π = 0).
fn lag_model(g: f64, c: f64) -> TnnModel {
    let a = Approximator::uniform(1, 1, ActivationKind::Linear, ActivationKind::Linear);
    let topo = TnnTopology::new(1, 1, 0, 1.0, &a, &a).unwrap();
    let mut params = TnnParameters::zeros(&topo);
    params.gamma.layers.last_mut().unwrap().bias[0] = g;
    params.theta_c[0] = (1.0 / c).log10();
    let schema = ChannelSchema::new(&[], &["coolant"], &["node"], 1.0).unwrap();
    TnnModel::new(topo, params, schema).unwrap()
}

fn nondecreasing(times: &[f64]) -> bool {
    times.windows(2).all(|w| w[1] >= w[0])
}

fn criterion_6(setup: &PlantSetup, model: Option<&TnnModel>) -> Outcome {
    let Some(model) = model else {
        return Outcome::Fail("no trained model from criterion 4".into());
    };
    let profile = &setup.folds.generalization[0];
    let offsets = [10.0, 20.0, 30.0, -10.0, -20.0, -30.0];
    let table = detuned_init_study(model, profile, &offsets, DEFAULT_BAND).unwrap();
    let plus30 = &table.rows[2].recovery;
    let finite = plus30.iter().all(|t| t.is_finite());
    let mut trained_monotone = true;
    for t in 0..table.targets.len() {
        let up: Vec<f64> = table.rows[..3].iter().map(|r| r.recovery[t]).collect();
        let down: Vec<f64> = table.rows[3..].iter().map(|r| r.recovery[t]).collect();
        trained_monotone &= nondecreasing(&up) && nondecreasing(&down);
    }

    // exact first-order lag: recovery time must grow with |offset|
    let (g, c) = (0.02, 3.0);
    let lag = simulate(&lag_plant(g, c, 0.3, 0.6, 1), 1200.0, 1.0, 0).unwrap();
    let sweep = [0.0, 5.0, 10.0, 15.0, 20.0, 30.0, 45.0, 60.0];
    let signed: Vec<f64> = sweep.iter().flat_map(|o| [*o, -*o]).collect();
    let lag_table = detuned_init_study(&lag_model(g, c), &lag.profiles[0], &signed, DEFAULT_BAND).unwrap();
    let pos: Vec<f64> = lag_table.rows.iter().step_by(2).map(|r| r.recovery[0]).collect();
    let neg: Vec<f64> = lag_table.rows.iter().skip(1).step_by(2).map(|r| r.recovery[0]).collect();
    let lag_ok = nondecreasing(&pos) && nondecreasing(&neg) && pos.iter().all(|t| t.is_finite()) && pos[0] == 0.0;

    let fmt = |v: &[f64]| v.iter().map(|t| format!("{t:.0}")).collect::<Vec<_>>().join("/");
    verdict(
        finite && trained_monotone && lag_ok,
        format!(
            "+30 K start recovers in {} s ({}); trained model monotone per sign: {trained_monotone}; \
             lag oracle recovery {} s for |offset| {}",
            fmt(plus30),
            table.targets.join("/"),
            fmt(&pos),
            fmt(&sweep)
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. parameter accounting

fn enumerate_serialized(model: &TnnModel) -> usize {
    let json: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
    let arrays = json["parameters"].as_array().unwrap();
    let size = |a: &serde_json::Value| -> usize {
        a["shape"].as_array().unwrap().iter().map(|d| d.as_u64().unwrap() as usize).product()
    };
    let total: usize = arrays.iter().map(size).sum();
    // a masked γ slot disables its output unit: one weight row, one bias and,
    // for a γ without hidden layers, its row of W_r
    let Some(last) = model.topology.gamma.layers.len().checked_sub(1) else {
        return total; // single node, no pairs
    };
    let cols = |name: &str| {
        arrays
            .iter()
            .find(|a| a["name"] == name)
            .map(|a| a["shape"][1].as_u64().unwrap() as usize)
            .unwrap_or(0)
    };
    let mut per_slot = cols(&format!("gamma.{last}.w")) + 1;
    if last == 0 {
        per_slot += cols("gamma.w_r");
    }
    total - model.topology.mask.len() * per_slot
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut mismatches = Vec::new();
    for case in 0..50 {
        let m = rng.random_range(1..=4);
        let n = rng.random_range(0..=2);
        let o = rng.random_range(0..=3);
        let approx = |rng: &mut ChaCha8Rng| {
            let depth = rng.random_range(0..=3);
            let hidden = (0..depth)
                .map(|_| LayerSpec::new(rng.random_range(1..=16), ActivationKind::Tanh))
                .collect();
            Approximator::new(hidden, ActivationKind::BiasedElu)
        };
        let pi = approx(&mut rng);
        let gamma = approx(&mut rng);
        let mut topo = TnnTopology::new(m, n, o, 0.5, &pi, &gamma).unwrap();
        if rng.random_bool(0.3) {
            topo = topo.with_dedicated_branches(&pi).unwrap();
        }
        let pairs = topo.pairs().len();
        let mask: Vec<usize> = (0..pairs).filter(|_| rng.random_bool(0.3)).collect();
        let topo = topo.with_mask(mask).unwrap();
        let names = |p: &str, k: usize| (0..k).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
        let (x, a, t) = (names("u", o), names("amb", n), names("t", m));
        fn refs(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        let mut schema = ChannelSchema::new(&refs(&x), &refs(&a), &refs(&t), 0.5).unwrap();
        for name in &x {
            schema = schema.with_divisor(name, 1.0);
        }
        let model = TnnModel::new(topo.clone(), TnnParameters::init(&topo, case, -2.0), schema).unwrap();
        let counted = count_parameters(&topo);
        let enumerated = enumerate_serialized(&model);
        if counted != enumerated {
            mismatches.push((case, counted, enumerated));
        }
    }
    let motor = ChannelSchema::motor_default();
    let spec = GridSpec::default();
    let small: Vec<usize> = grid_candidates(&spec)
        .unwrap()
        .iter()
        .map(|c| count_parameters(&c.topology(&spec, &motor).unwrap()))
        .filter(|n| (60..=70).contains(n))
        .collect();
    verdict(
        mismatches.is_empty() && !small.is_empty(),
        format!(
            "50 random topologies, {} count mismatches; motor-sized grid holds {} configuration(s) with 60–70 parameters ({:?})",
            mismatches.len(),
            small.len(),
            small
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. real motor dataset (optional)

fn id_list(ids: &[u32]) -> Vec<String> {
    ids.iter().map(|i| i.to_string()).collect()
}

fn criterion_8() -> Outcome {
    let Ok(path) = std::env::var("TNN_MOTOR_DATASET") else {
        return Outcome::Skip("set TNN_MOTOR_DATASET to the motor temperature CSV to run".into());
    };
    let schema = ChannelSchema::motor_default();
    let profiles = match ingest_csv(&path, &schema) {
        Ok(p) => p,
        Err(e) => return Outcome::Fail(format!("cannot read {path}: {e}")),
    };
    let plan = match std::env::var("TNN_MOTOR_FOLDS") {
        Ok(p) => match std::fs::read_to_string(&p).map(|t| serde_json::from_str::<FoldPlan>(&t)) {
            Ok(Ok(plan)) => plan,
            _ => return Outcome::Fail(format!("cannot read fold plan {p}")),
        },
        Err(_) => {
            let generalization = id_list(&[60, 62, 74]);
            let fold_1 = id_list(&[65]);
            let fold_2 = id_list(&[72]);
            FoldPlan {
                train: profiles
                    .iter()
                    .map(|p| p.id().to_string())
                    .filter(|id| !generalization.contains(id) && !fold_1.contains(id) && !fold_2.contains(id))
                    .collect(),
                fold_1,
                fold_2,
                generalization,
            }
        }
    };
    let folds = match make_folds(&profiles, &plan) {
        Ok(f) => f,
        Err(e) => return Outcome::Fail(format!("fold plan: {e}")),
    };
    let relu = |w| LayerSpec::new(w, ActivationKind::Relu).with_l2(1e-8);
    let pi = Approximator::new(
        vec![relu(109), LayerSpec::new(3, ActivationKind::Sigmoid).with_l2(1e-8)],
        ActivationKind::Sigmoid,
    );
    let gamma = Approximator::new(
        vec![
            LayerSpec::new(2, ActivationKind::Tanh).with_l2(5.5e-6),
            LayerSpec::new(2, ActivationKind::Sinus).with_l2(5.3e-8),
        ],
        ActivationKind::BiasedElu,
    );
    let d = schema.dims();
    let topo = TnnTopology::new(d.targets, d.ancillary, d.exogenous, schema.sample_time, &pi, &gamma).unwrap();
    let epochs = std::env::var("TNN_MOTOR_EPOCHS").ok().and_then(|v| v.parse().ok()).unwrap_or(100);
    let config = TrainConfig {
        learning_rate: 11e-3,
        tbptt_len: 1227,
        max_epochs: epochs,
        ..Default::default()
    };
    let split = folds.split(CvIteration::First);
    let mut best: Option<(f64, f64, u64)> = None;
    for seed in 0..10u64 {
        let cfg = TrainConfig { seed, ..config.clone() };
        let Ok((params, _)) = fit(&topo, &split, &cfg) else { continue };
        let model = TnnModel::new(topo.clone(), params, schema.clone()).unwrap();
        let r = evaluate(&model, &folds.generalization, InitMode::GroundTruth).unwrap();
        if r.failed_profiles.is_empty() && best.is_none_or(|(mse, _, _)| r.mse < mse) {
            best = Some((r.mse, r.linf, seed));
        }
    }
    match best {
        Some((mse, linf, seed)) => verdict(
            mse <= 5.0 && linf <= 10.0,
            format!("best seed {seed}: generalization MSE {mse:.2} K², ℓ∞ {linf:.2} K"),
        ),
        None => Outcome::Fail("every seed failed to train".into()),
    }
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("criterion {n} [{name}]: {tag} - {detail}");
    };
    report(1, "gradient oracle", criterion_1());
    report(2, "cell-update exactness", criterion_2());
    report(3, "plant oracle convergence", criterion_3());
    let setup = plant_setup();
    let (outcome, model) = criterion_4(&setup);
    report(4, "identification at desk scale", outcome);
    report(5, "pruning discovery", criterion_5(&setup));
    report(6, "initial-condition recovery", criterion_6(&setup, model.as_ref()));
    report(7, "parameter accounting", criterion_7());
    report(8, "real-data target", criterion_8());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
