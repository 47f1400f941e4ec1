use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::excitation::excite;
use super::spec::{CompiledPlant, PlantSpec};
use crate::data::{ChannelSchema, MeasurementProfile};
use crate::tnn::derive_seed;
use crate::{Error, Result};

/// Conductances and losses the plant actually applied at each sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTrajectory {
    pub profile_id: String,
    /// `len × pairs`, row-major, pair slots as in [`crate::tnn::ConductancePairIndex`].
    pub conductances: Vec<f64>,
    /// `len × m`, row-major.
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub schema: ChannelSchema,
    pub profiles: Vec<MeasurementProfile>,
    pub truth: Vec<TruthTrajectory>,
}

const STATE_LIMIT: f64 = 1e3;

/// Simulates one profile with id `sim` lasting `duration` seconds.
///
/// The result has `round(duration / sample_time) + 1` samples.
pub fn simulate(spec: &PlantSpec, duration: f64, sample_time: f64, seed: u64) -> Result<SyntheticDataset> {
    run(spec, &[("sim".to_string(), seed)], duration, sample_time)
}

/// Simulates `count` independent profiles `p0, p1, ..`, each lasting `duration` seconds.
pub fn simulate_dataset(
    spec: &PlantSpec,
    count: usize,
    duration: f64,
    sample_time: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if count == 0 {
        return Err(Error::Argument("profile count must be positive".into()));
    }
    let jobs: Vec<(String, u64)> = (0..count).map(|i| (format!("p{i}"), derive_seed(seed, i as u64))).collect();
    run(spec, &jobs, duration, sample_time)
}

fn run(spec: &PlantSpec, jobs: &[(String, u64)], duration: f64, sample_time: f64) -> Result<SyntheticDataset> {
    if !(sample_time > 0.0 && sample_time.is_finite()) {
        return Err(Error::Argument(format!("sample time must be positive, got {sample_time}")));
    }
    if !(duration >= 2.0 * sample_time && duration.is_finite()) {
        return Err(Error::Argument(format!(
            "duration {duration} s is shorter than two sample periods"
        )));
    }
    let compiled = spec.compile()?;
    let len = (duration / sample_time).round() as usize + 1;
    let mut profiles = Vec::with_capacity(jobs.len());
    let mut truth = Vec::with_capacity(jobs.len());
    for (id, seed) in jobs {
        let (p, t) = simulate_profile(spec, &compiled, id, len, sample_time, *seed)?;
        profiles.push(p);
        truth.push(t);
    }
    Ok(SyntheticDataset {
        schema: spec.schema.clone().with_sample_time(sample_time),
        profiles,
        truth,
    })
}

fn simulate_profile(
    spec: &PlantSpec,
    plant: &CompiledPlant,
    id: &str,
    len: usize,
    sample_time: f64,
    seed: u64,
) -> Result<(MeasurementProfile, TruthTrajectory)> {
    let m = spec.targets();
    let n = spec.schema.ancillary.len();
    let o = spec.schema.exogenous.len();
    let width = n + o + m;
    let pairs = spec.pairs();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut state: Vec<f64> = spec.initial.iter().map(|[lo, hi]| lo + (hi - lo) * rng.random::<f64>()).collect();
    let inputs: Vec<Vec<f64>> = plant
        .excitation
        .iter()
        .enumerate()
        .map(|(c, e)| excite(e, len, sample_time, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 1 + c as u64))))
        .collect::<Result<_>>()?;

    let h = sample_time / spec.substeps as f64;
    let mut values = Vec::with_capacity(len * width);
    let mut g_true = Vec::with_capacity(len * pairs.len());
    let mut p_true = Vec::with_capacity(len * m);
    let mut zeta = vec![0.0; width];
    let mut g = vec![0.0; pairs.len()];
    let mut p = vec![0.0; m];
    let mut deriv = vec![0.0; m];

    for k in 0..len {
        for (c, series) in inputs.iter().enumerate() {
            zeta[c] = series[k];
        }
        for s in 0..spec.substeps {
            zeta[n + o..].copy_from_slice(&state);
            evaluate(spec, plant, &zeta, k, &mut g, &mut p)?;
            if s == 0 {
                values.extend_from_slice(&zeta);
                g_true.extend_from_slice(&g);
                p_true.extend_from_slice(&p);
                if k + 1 == len {
                    break;
                }
            }
            for (i, d) in deriv.iter_mut().enumerate() {
                let mut flow = p[i];
                for j in 0..m + n {
                    if let Some(slot) = pairs.slot(i, j) {
                        let other = if j < m { state[j] } else { zeta[j - m] };
                        flow += g[slot] * (other - state[i]);
                    }
                }
                *d = flow / spec.capacitances[i];
            }
            for (x, d) in state.iter_mut().zip(&deriv) {
                *x += h * d;
            }
            if state.iter().any(|x| !x.is_finite() || x.abs() > STATE_LIMIT) {
                return Err(Error::Generation {
                    step: k,
                    detail: instability_detail(spec, &g, h),
                });
            }
        }
    }

    let profile = MeasurementProfile::new(id, spec.schema.dims(), values)?;
    let truth = TruthTrajectory {
        profile_id: id.to_string(),
        conductances: g_true,
        losses: p_true,
    };
    Ok((profile, truth))
}

fn evaluate(spec: &PlantSpec, plant: &CompiledPlant, zeta: &[f64], k: usize, g: &mut [f64], p: &mut [f64]) -> Result<()> {
    let pairs = spec.pairs();
    for (slot, (f, out)) in plant.conductances.iter().zip(g.iter_mut()).enumerate() {
        *out = f.eval(zeta);
        if !(*out >= 0.0 && out.is_finite()) {
            let (a, b) = pairs.pair(slot).expect("slot in range");
            return Err(Error::Generation {
                step: k,
                detail: format!(
                    "conductance of pair ({}, {}) evaluates to {}",
                    spec.node_name(a),
                    spec.node_name(b),
                    out
                ),
            });
        }
    }
    for (i, (f, out)) in plant.losses.iter().zip(p.iter_mut()).enumerate() {
        *out = f.eval(zeta);
        if !(*out >= 0.0 && out.is_finite()) {
            return Err(Error::Generation {
                step: k,
                detail: format!("loss of node {} evaluates to {}", spec.schema.targets[i], out),
            });
        }
    }
    Ok(())
}

/// Names the pair with the largest explicit-Euler stiffness g·h·(1/C_a + 1/C_b).
fn instability_detail(spec: &PlantSpec, g: &[f64], h: f64) -> String {
    let m = spec.targets();
    let inv_c = |node: usize| if node < m { 1.0 / spec.capacitances[node] } else { 0.0 };
    let pairs = spec.pairs();
    let worst = pairs
        .pairs()
        .enumerate()
        .map(|(slot, (a, b))| (g[slot] * h * (inv_c(a) + inv_c(b)), a, b))
        .max_by(|x, y| x.0.total_cmp(&y.0));
    match worst {
        Some((ratio, a, b)) => format!(
            "state magnitude exceeded {STATE_LIMIT}; stiffest pair ({}, {}) has g·h·(1/C_a + 1/C_b) = {ratio:.3} \
             (explicit Euler needs < 2), increase substeps",
            spec.node_name(a),
            spec.node_name(b)
        ),
        None => format!("state magnitude exceeded {STATE_LIMIT}"),
    }
}

/// Writes the per-sample true conductances and losses as CSV.
///
/// Columns: `profile_id, k, g_<a>_<b>.., p_<node>..`.
pub fn write_truth_csv(path: impl AsRef<Path>, spec: &PlantSpec, dataset: &SyntheticDataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    let pairs = spec.pairs();
    let mut header = vec!["profile_id".to_string(), "k".to_string()];
    header.extend(pairs.pairs().map(|(a, b)| format!("g_{}_{}", spec.node_name(a), spec.node_name(b))));
    header.extend(spec.schema.targets.iter().map(|t| format!("p_{t}")));
    w.write_record(&header)?;
    let m = spec.targets();
    for t in &dataset.truth {
        let len = t.losses.len() / m;
        for k in 0..len {
            let mut rec = vec![t.profile_id.clone(), k.to_string()];
            rec.extend(t.conductances[k * pairs.len()..(k + 1) * pairs.len()].iter().map(|v| v.to_string()));
            rec.extend(t.losses[k * m..(k + 1) * m].iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::spec::{ConductanceFn, LossFn};
    use crate::plant::{default_plant, disconnected_pair_spec, Excitation, DEFAULT_DISCONNECTED_PAIR};

    fn single_node(g: f64, ambient: f64, start: f64, substeps: usize) -> PlantSpec {
        PlantSpec {
            schema: ChannelSchema::new(&[], &["amb"], &["t"], 1.0).unwrap(),
            capacitances: vec![2.0],
            conductances: vec![ConductanceFn::Constant { value: g }],
            losses: vec![LossFn::Constant { value: 0.0 }],
            excitation: vec![Excitation::constant("amb", ambient)],
            initial: vec![[start, start]],
            substeps,
        }
    }

    #[test]
    fn matches_exponential_solution() {
        let (g, c, amb, start) = (0.05, 2.0, 0.2, 0.9);
        let d = simulate(&single_node(g, amb, start, 100), 200.0, 1.0, 0).unwrap();
        let p = &d.profiles[0];
        assert_eq!(p.len(), 201);
        for k in 0..p.len() {
            let exact = amb + (start - amb) * (-g * k as f64 / c).exp();
            assert!((p.targets(k)[0] - exact).abs() <= 0.01 * (start - amb), "k={k}");
        }
    }

    #[test]
    fn isolated_nodes_stay_constant() {
        let mut spec = default_plant();
        spec.conductances = vec![ConductanceFn::Constant { value: 0.0 }; 6];
        spec.losses = vec![LossFn::Constant { value: 0.0 }; 3];
        let d = simulate(&spec, 60.0, 0.5, 4).unwrap();
        let p = &d.profiles[0];
        for k in 1..p.len() {
            assert_eq!(p.targets(k), p.targets(0));
        }
    }

    #[test]
    fn energy_balance_without_ancillary_nodes() {
        // with no ancillary node conduction only moves heat around, so
        // Σ C_i ϑ_i grows by exactly Σ_k T_s Σ_i P_i[k] (losses frozen per substep)
        let schema = ChannelSchema::new(&["i_s"], &[], &["a", "b", "c"], 0.5).unwrap();
        let spec = PlantSpec {
            schema,
            capacitances: vec![3.0; 3],
            conductances: vec![
                ConductanceFn::Constant { value: 0.2 },
                ConductanceFn::Affine {
                    channel: "i_s".into(),
                    offset: 0.1,
                    slope: 0.3,
                },
                ConductanceFn::Polynomial {
                    channel: "a".into(),
                    coeffs: vec![0.05, 0.1],
                },
            ],
            losses: vec![
                LossFn::Quadratic {
                    channel: "i_s".into(),
                    offset: 0.001,
                    coeff: 0.01,
                },
                LossFn::Constant { value: 0.002 },
                LossFn::Constant { value: 0.0 },
            ],
            excitation: vec![Excitation {
                channel: "i_s".into(),
                low: 0.0,
                high: 1.0,
                dwell_min: 5.0,
                dwell_max: 20.0,
                walk_probability: 0.5,
                walk_step: 0.02,
            }],
            initial: vec![[0.1, 0.9]; 3],
            substeps: 1,
        };
        let d = simulate(&spec, 300.0, 0.5, 9).unwrap();
        let p = &d.profiles[0];
        let t = &d.truth[0];
        let energy = |k: usize| p.targets(k).iter().sum::<f64>() * 3.0;
        let mut injected = 0.0;
        for k in 0..p.len() - 1 {
            injected += 0.5 * t.losses[k * 3..k * 3 + 3].iter().sum::<f64>();
            let drift = energy(k + 1) - energy(0) - injected;
            assert!(drift.abs() < 1e-12, "k={k}: {drift}");
        }
    }

    #[test]
    fn euler_convergence_order() {
        let mut spec = reconnect_all(default_plant());
        let reference = {
            spec.substeps = 512;
            simulate(&spec, 600.0, 0.5, 3).unwrap().profiles.remove(0)
        };
        let mut errors = Vec::new();
        for substeps in [1usize, 2, 4] {
            spec.substeps = substeps;
            let p = simulate(&spec, 600.0, 0.5, 3).unwrap().profiles.remove(0);
            let err = (0..p.len())
                .flat_map(|k| p.targets(k).iter().zip(reference.targets(k)).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
                .fold(0.0, f64::max);
            errors.push(err);
        }
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 0.9, "errors {errors:?}");
        }
    }

    fn reconnect_all(mut spec: PlantSpec) -> PlantSpec {
        for g in &mut spec.conductances {
            if let ConductanceFn::Disconnected { base } = g {
                *g = (**base).clone();
            }
        }
        spec
    }

    #[test]
    fn deterministic_and_valid_dataset() {
        let a = simulate_dataset(&default_plant(), 3, 120.0, 0.5, 42).unwrap();
        let b = simulate_dataset(&default_plant(), 3, 120.0, 0.5, 42).unwrap();
        assert_eq!(a.profiles, b.profiles);
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.profiles[2].id(), "p2");
        assert_ne!(a.profiles[0].values(), a.profiles[1].values());
        // re-ingest through the CSV path
        let mut buf = Vec::new();
        crate::data::write_csv_to(&mut buf, &a.schema, &a.profiles).unwrap();
        let back = crate::data::ingest_reader(buf.as_slice(), &a.schema).unwrap();
        assert_eq!(back.len(), 3);
        for (x, y) in back.iter().zip(&a.profiles) {
            for (u, v) in x.values().iter().zip(y.values()) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truth_re_evaluates_bitwise() {
        let spec = default_plant();
        let d = simulate_dataset(&spec, 2, 300.0, 0.5, 1).unwrap();
        let compiled = spec.compile().unwrap();
        let mut g = vec![0.0; 6];
        let mut p = vec![0.0; 3];
        for (prof, truth) in d.profiles.iter().zip(&d.truth) {
            for k in 0..prof.len() {
                evaluate(&spec, &compiled, prof.row(k), k, &mut g, &mut p).unwrap();
                assert_eq!(g.as_slice(), &truth.conductances[k * 6..k * 6 + 6]);
                assert_eq!(p.as_slice(), &truth.losses[k * 3..k * 3 + 3]);
            }
        }
        let slot = spec.pairs().slot(DEFAULT_DISCONNECTED_PAIR.0, DEFAULT_DISCONNECTED_PAIR.1).unwrap();
        assert!(d.truth[0].conductances.chunks(6).all(|c| c[slot] == 0.0));
    }

    #[test]
    fn disconnected_node_ignores_partner_initial_condition() {
        let schema = ChannelSchema::new(&[], &["amb"], &["a", "b"], 0.5).unwrap();
        let base = PlantSpec {
            schema,
            capacitances: vec![1.0, 2.0],
            conductances: vec![
                ConductanceFn::Constant { value: 0.3 },
                ConductanceFn::Constant { value: 0.1 },
                ConductanceFn::Constant { value: 0.2 },
            ],
            losses: vec![LossFn::Constant { value: 0.01 }, LossFn::Constant { value: 0.0 }],
            excitation: vec![Excitation {
                channel: "amb".into(),
                low: 0.2,
                high: 0.4,
                dwell_min: 5.0,
                dwell_max: 10.0,
                walk_probability: 0.3,
                walk_step: 0.01,
            }],
            initial: vec![[0.5, 0.5], [0.1, 0.1]],
            substeps: 4,
        };
        let spec = disconnected_pair_spec(&base, (0, 1)).unwrap();
        let mut other = spec.clone();
        other.initial[1] = [0.9, 0.9];
        let x = simulate(&spec, 100.0, 0.5, 5).unwrap().profiles.remove(0);
        let y = simulate(&other, 100.0, 0.5, 5).unwrap().profiles.remove(0);
        for k in 0..x.len() {
            assert_eq!(x.targets(k)[0], y.targets(k)[0]);
        }
        assert_ne!(x.targets(10)[1], y.targets(10)[1]);
        // connected, node a feels node b
        let mut other_base = base.clone();
        other_base.initial[1] = [0.9, 0.9];
        let x = simulate(&base, 100.0, 0.5, 5).unwrap().profiles.remove(0);
        let y = simulate(&other_base, 100.0, 0.5, 5).unwrap().profiles.remove(0);
        assert_ne!(x.targets(10)[0], y.targets(10)[0]);
    }

    #[test]
    fn two_node_decoupling() {
        // m=2, n=0, only pair disconnected → each node integrates its own loss
        let schema = ChannelSchema::new(&[], &[], &["a", "b"], 1.0).unwrap();
        let base = PlantSpec {
            schema,
            capacitances: vec![1.0, 4.0],
            conductances: vec![ConductanceFn::Constant { value: 0.5 }],
            losses: vec![LossFn::Constant { value: 0.01 }, LossFn::Constant { value: 0.02 }],
            excitation: vec![],
            initial: vec![[0.3, 0.3], [0.6, 0.6]],
            substeps: 3,
        };
        let d = simulate(&disconnected_pair_spec(&base, (0, 1)).unwrap(), 10.0, 1.0, 0).unwrap();
        let p = &d.profiles[0];
        for k in 0..p.len() {
            assert!((p.targets(k)[0] - (0.3 + 0.01 * k as f64)).abs() < 1e-12);
            assert!((p.targets(k)[1] - (0.6 + 0.005 * k as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn instability_names_pair() {
        let spec = single_node(50.0, 0.0, 1.0, 1);
        let err = simulate(&spec, 100.0, 1.0, 0).unwrap_err();
        match err {
            Error::Generation { detail, .. } => assert!(detail.contains("(t, amb)"), "{detail}"),
            e => panic!("{e}"),
        }
        let mut neg = single_node(0.1, 0.0, 1.0, 1);
        neg.conductances[0] = ConductanceFn::Affine {
            channel: "amb".into(),
            offset: -1.0,
            slope: 0.0,
        };
        assert!(matches!(simulate(&neg, 10.0, 1.0, 0), Err(Error::Generation { .. })));
    }

    #[test]
    fn row_count_and_bad_duration() {
        let d = simulate(&default_plant(), 3600.0, 0.5, 0).unwrap();
        assert_eq!(d.profiles[0].len(), 7201);
        assert!(simulate(&default_plant(), 0.9, 0.5, 0).is_err());
    }

    #[test]
    fn truth_csv_has_named_columns() {
        let spec = default_plant();
        let d = simulate_dataset(&spec, 2, 5.0, 0.5, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.csv");
        write_truth_csv(&path, &spec, &d).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("profile_id,k,g_pm_stator_yoke,g_pm_stator_winding"));
        assert_eq!(lines.count(), 22);
    }
}
