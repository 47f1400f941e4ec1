use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use tnn_core::analysis::{
    conductance_medians, detuned_init_study, evaluate, grid_search, initial_state, prune as prune_topology,
    EvalReport, GridPoint, InitMode,
};
use tnn_core::data::{ingest_csv, make_folds, write_csv_to, ChannelSchema, CvSplit, FoldSets, MeasurementProfile};
use tnn_core::plant::{simulate_dataset, write_truth_csv};
use tnn_core::tnn::{count_parameters, rollout, TnnModel, TnnTopology};
use tnn_core::train::{fit_with_observer, validation_mse, EpochRecord, TrainConfig, TrainReport};

use crate::config::parse_list;
use crate::error::CliError;
use crate::manifest::{FileDigest, RunManifest};
use crate::output::{sibling, Staged};
use crate::{svg, Ctx, Format, Set};

fn data_path(ctx: &Ctx, data: Option<&Path>) -> Result<PathBuf, CliError> {
    let path = data
        .map(Path::to_path_buf)
        .or_else(|| ctx.config.data.csv.clone())
        .ok_or_else(|| CliError::config("no data: pass --data or set `csv` in [data]"))?;
    Ok(if path.is_dir() { path.join("profiles.csv") } else { path })
}

fn load_profiles(
    ctx: &Ctx,
    data: Option<&Path>,
    schema: &ChannelSchema,
    manifest: &mut RunManifest,
) -> Result<Vec<MeasurementProfile>, CliError> {
    let path = data_path(ctx, data)?;
    if !path.is_file() {
        return Err(CliError::io(format!("{}: no such file", path.display())));
    }
    manifest.input(&path)?;
    ingest_csv(&path, schema).map_err(|e| CliError::from(e).context(path.display()))
}

/// An empty `train` list means every profile not named elsewhere.
fn folds(ctx: &Ctx, profiles: &[MeasurementProfile]) -> Result<FoldSets, CliError> {
    let mut plan = ctx.config.folds();
    if plan.train.is_empty() {
        let named: Vec<&String> = plan.fold_1.iter().chain(&plan.fold_2).chain(&plan.generalization).collect();
        plan.train = profiles
            .iter()
            .map(|p| p.id().to_string())
            .filter(|id| !named.contains(&id))
            .collect();
    }
    make_folds(profiles, &plan).map_err(|e| CliError::from(e).context("[data] folds"))
}

fn select(sets: &FoldSets, set: Set) -> Vec<MeasurementProfile> {
    match set {
        Set::Train => sets.train.clone(),
        Set::Fold1 => sets.fold_1.clone(),
        Set::Fold2 => sets.fold_2.clone(),
        Set::Generalization => sets.generalization.clone(),
        Set::All => sets.all().cloned().collect(),
    }
}

fn set_name(set: Set) -> &'static str {
    match set {
        Set::Train => "train",
        Set::Fold1 => "fold_1",
        Set::Fold2 => "fold_2",
        Set::Generalization => "generalization",
        Set::All => "all",
    }
}

fn load_model(path: &Path, manifest: &mut RunManifest) -> Result<TnnModel, CliError> {
    manifest.input(path)?;
    TnnModel::load(path).map_err(|e| CliError::from(e).context(path.display()))
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::io(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::io(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::io(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

/// CSV or JSON rendering of a report, following `--format`.
fn report(ctx: &Ctx, header: &[&str], rows: &[Vec<String>], json: &impl Serialize) -> Result<Vec<u8>, CliError> {
    match ctx.format {
        Format::Csv => csv_bytes(header, rows),
        Format::Json => json_bytes(json),
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn manifest_path(out: &Path) -> PathBuf {
    sibling(out, ".manifest.json")
}

// ---------------------------------------------------------------- simulate

pub fn simulate(ctx: &Ctx, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let plant = &ctx.config.plant;
    let seed = seed.unwrap_or(plant.seed);
    let mut manifest = ctx.manifest("simulate")?;
    manifest.seeds = vec![seed];
    let dataset = simulate_dataset(&plant.spec, plant.profiles, plant.duration, plant.spec.schema.sample_time, seed)
        .map_err(|e| CliError::from(e).context("[plant]"))?;
    let mut csv = Vec::new();
    write_csv_to(&mut csv, &dataset.schema, &dataset.profiles)?;
    let mut staged = Staged::new();
    staged.bytes(out.join("profiles.csv"), &csv)?;
    staged.with_path(out.join("truth.csv"), |p| write_truth_csv(p, &plant.spec, &dataset))?;
    manifest.commit_with(staged, &out.join("manifest.json"))?;
    let samples = dataset.profiles.first().map_or(0, |p| p.len());
    println!("wrote {} profiles of {samples} samples to {}", dataset.profiles.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------- train

pub struct TrainArgs<'a> {
    pub data: Option<&'a Path>,
    pub out: &'a Path,
    pub seed: Option<u64>,
    pub seeds: Option<&'a str>,
    pub topology: Option<&'a Path>,
    pub dry_run: bool,
}

fn read_topology(path: &Path) -> Result<TnnTopology, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let topo: TnnTopology =
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    topo.validate().map_err(|e| CliError::from(e).context(path.display()))?;
    Ok(topo)
}

fn check_layout(topology: &TnnTopology, schema: &ChannelSchema) -> Result<(), CliError> {
    let d = schema.dims();
    if (d.targets, d.ancillary, d.exogenous) != (topology.targets, topology.ancillary, topology.exogenous) {
        return Err(CliError::config(format!(
            "topology has {}/{}/{} target/ancillary/exogenous channels, schema has {}/{}/{}",
            topology.targets, topology.ancillary, topology.exogenous, d.targets, d.ancillary, d.exogenous
        )));
    }
    Ok(())
}

const LOG_HEADER: &str = "epoch,train_loss,val_mse,grad_norm,failed_windows,windows,wall_clock_s";

fn log_row(r: &EpochRecord) -> String {
    format!(
        "{},{},{},{},{},{},{:.3}",
        r.epoch, r.train_loss, r.val_mse, r.grad_norm, r.failed_windows, r.windows, r.elapsed
    )
}

/// Trains with an epoch log that is flushed after every row.
fn fit_logged(
    topology: &TnnTopology,
    split: &CvSplit,
    config: &TrainConfig,
    log_path: &Path,
) -> Result<tnn_core::Result<(tnn_core::tnn::TnnParameters, TrainReport)>, CliError> {
    if let Some(dir) = log_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
    }
    let file = File::create(log_path).map_err(|e| CliError::io(format!("{}: {e}", log_path.display())))?;
    let mut log = BufWriter::new(file);
    writeln!(log, "{LOG_HEADER}")?;
    log.flush()?;
    let mut io_error = None;
    let result = fit_with_observer(topology, split, config, |r| {
        if io_error.is_none() {
            if let Err(e) = writeln!(log, "{}", log_row(r)).and_then(|_| log.flush()) {
                io_error = Some(e);
            }
        }
    });
    log.flush()?;
    if let Some(e) = io_error {
        return Err(CliError::io(format!("{}: {e}", log_path.display())));
    }
    Ok(result)
}

#[derive(Serialize)]
struct SeedRow {
    seed: u64,
    status: String,
    model: Option<String>,
    best_epoch: Option<usize>,
    stopped_epoch: Option<usize>,
    /// normalized units
    best_val_mse: Option<f64>,
    /// normalized units
    test_mse: Option<f64>,
    /// K²
    generalization_mse: Option<f64>,
    parameters: usize,
}

#[derive(Serialize)]
struct Aggregate {
    runs: Vec<SeedRow>,
    mean_generalization_mse: Option<f64>,
    min_generalization_mse: Option<f64>,
    max_generalization_mse: Option<f64>,
}

pub fn train(ctx: &Ctx, args: TrainArgs<'_>) -> Result<(), CliError> {
    let mut manifest = ctx.manifest("train")?;
    let schema = ctx.config.schema().clone();
    let topology = match args.topology {
        Some(p) => {
            manifest.input(p)?;
            read_topology(p)?
        }
        None => ctx.config.topology()?,
    };
    check_layout(&topology, &schema)?;
    let parameters = count_parameters(&topology);
    if args.dry_run {
        println!("parameters: {parameters}");
        if args.data.is_some() || ctx.config.data.csv.is_some() {
            let profiles = load_profiles(ctx, args.data, &schema, &mut manifest)?;
            let sets = folds(ctx, &profiles)?;
            println!(
                "profiles: train {}, fold_1 {}, fold_2 {}, generalization {}",
                sets.train.len(),
                sets.fold_1.len(),
                sets.fold_2.len(),
                sets.generalization.len()
            );
        }
        return Ok(());
    }
    let (seeds, suffixed) = match args.seeds {
        Some(list) => {
            let seeds: Vec<u64> = parse_list(list, "seeds")?;
            if seeds.is_empty() {
                return Err(CliError::config("--seeds is empty"));
            }
            (seeds, true)
        }
        None => (vec![args.seed.unwrap_or(ctx.config.train.seed)], false),
    };
    manifest.seeds = seeds.clone();
    let profiles = load_profiles(ctx, args.data, &schema, &mut manifest)?;
    let sets = folds(ctx, &profiles)?;
    let mut split = sets.split(ctx.config.data.iteration);
    if let Some(len) = ctx.config.train.subsequence_len {
        split = split.with_subsequences(len)?;
    }
    let model_path = |seed: u64| {
        if suffixed {
            let ext = args.out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
            sibling(args.out, &format!(".seed{seed}{ext}"))
        } else {
            args.out.to_path_buf()
        }
    };
    let log_path = |seed: u64| sibling(&model_path(seed), ".log.csv");
    let runs: Vec<_> = seeds
        .par_iter()
        .map(|&seed| {
            let config = TrainConfig { seed, ..ctx.config.train.clone() };
            fit_logged(&topology, &split, &config, &log_path(seed))
        })
        .collect();

    let mut staged = Staged::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&seed, run) in seeds.iter().zip(runs) {
        let mut row = SeedRow {
            seed,
            status: "ok".into(),
            model: None,
            best_epoch: None,
            stopped_epoch: None,
            best_val_mse: None,
            test_mse: None,
            generalization_mse: None,
            parameters,
        };
        match run? {
            Ok((params, report)) => {
                let model = TnnModel::new(topology.clone(), params, schema.clone())?;
                row.test_mse = validation_mse(&topology, &model.params, &split.test).ok();
                let mut gen = evaluate(&model, &sets.generalization, InitMode::GroundTruth)?;
                gen.seed = Some(seed);
                row.generalization_mse = Some(gen.mse);
                row.best_epoch = Some(report.best_epoch);
                row.stopped_epoch = Some(report.stopped_epoch);
                row.best_val_mse = Some(report.best_val_mse);
                let path = model_path(seed);
                row.model = Some(path.display().to_string());
                staged.bytes(&path, model.to_json()?.as_bytes())?;
                println!(
                    "seed {seed}: best epoch {} of {}, val {:.4e}, generalization {:.4} K²",
                    report.best_epoch, report.stopped_epoch, report.best_val_mse, gen.mse
                );
            }
            Err(e) => {
                log::error!("seed {seed}: {e}");
                row.status = format!("failed: {e}");
                failures.push(format!("seed {seed}: {e}"));
            }
        }
        rows.push(row);
    }
    for &seed in &seeds {
        manifest.outputs.push(FileDigest::of(&log_path(seed))?);
    }
    if suffixed {
        let gens: Vec<f64> = rows.iter().filter_map(|r| r.generalization_mse).collect();
        let agg = Aggregate {
            mean_generalization_mse: (!gens.is_empty()).then(|| gens.iter().sum::<f64>() / gens.len() as f64),
            min_generalization_mse: gens.iter().copied().reduce(f64::min),
            max_generalization_mse: gens.iter().copied().reduce(f64::max),
            runs: rows,
        };
        let header = [
            "seed",
            "status",
            "model",
            "best_epoch",
            "stopped_epoch",
            "best_val_mse",
            "test_mse",
            "generalization_mse_k2",
            "parameters",
        ];
        let mut table: Vec<Vec<String>> = agg
            .runs
            .iter()
            .map(|r| {
                vec![
                    r.seed.to_string(),
                    r.status.clone(),
                    r.model.clone().unwrap_or_default(),
                    r.best_epoch.map(|e| e.to_string()).unwrap_or_default(),
                    r.stopped_epoch.map(|e| e.to_string()).unwrap_or_default(),
                    opt(r.best_val_mse),
                    opt(r.test_mse),
                    opt(r.generalization_mse),
                    r.parameters.to_string(),
                ]
            })
            .collect();
        for (name, v) in [
            ("mean", agg.mean_generalization_mse),
            ("min", agg.min_generalization_mse),
            ("max", agg.max_generalization_mse),
        ] {
            let mut row = vec![String::new(); header.len()];
            row[0] = name.into();
            row[7] = opt(v);
            table.push(row);
        }
        let ext = match ctx.format {
            Format::Csv => ".aggregate.csv",
            Format::Json => ".aggregate.json",
        };
        staged.bytes(sibling(args.out, ext), &report(ctx, &header, &table, &agg)?)?;
    }
    manifest.commit_with(staged, &manifest_path(args.out))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::training(failures.join("; ")))
    }
}

// ---------------------------------------------------------------- eval

fn parse_init(text: &str) -> Result<InitMode, CliError> {
    match text {
        "ground_truth" | "truth" => Ok(InitMode::GroundTruth),
        "ambient" => Ok(InitMode::Ambient),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(InitMode::Fixed)
            .ok_or_else(|| CliError::config(format!("--init `{other}`: expected ground_truth, ambient or °C"))),
    }
}

/// Per-sample errors in K of every target, or `None` if the rollout diverged.
fn error_series(model: &TnnModel, profile: &MeasurementProfile, init: &[f64]) -> Result<Option<Vec<Vec<f64>>>, CliError> {
    let divisors = model.schema.target_divisors()?;
    let traj = match rollout(&model.topology, &model.params, profile, init) {
        Ok(t) => t,
        Err(tnn_core::Error::Divergence { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    Ok(Some(
        (0..divisors.len())
            .map(|t| (0..profile.len()).map(|k| (traj.row(k)[t] - profile.targets(k)[t]) * divisors[t]).collect())
            .collect(),
    ))
}

pub fn eval(ctx: &Ctx, data: Option<&Path>, model_path: &Path, set: Set, init: &str, out: &Path) -> Result<(), CliError> {
    let mut manifest = ctx.manifest("eval")?;
    let init = parse_init(init)?;
    let model = load_model(model_path, &mut manifest)?;
    let profiles = load_profiles(ctx, data, &model.schema, &mut manifest)?;
    let profiles = select(&folds(ctx, &profiles)?, set);
    let mut rep: EvalReport = evaluate(&model, &profiles, init)?;
    rep.fold = set_name(set).to_string();

    let mut rows: Vec<Vec<String>> = rep
        .targets
        .iter()
        .zip(&rep.per_target_mse)
        .map(|(t, m)| vec![t.clone(), num(*m)])
        .collect();
    rows.push(vec!["mean".into(), num(rep.mse)]);
    let mut staged = Staged::new();
    staged.bytes(out, &report(ctx, &["target", "mse_k2"], &rows, &rep)?)?;

    let first = &profiles[0];
    let ts = model.topology.sample_time;
    if let Some(errors) = error_series(&model, first, &initial_state(&model, first, init)?)? {
        let series: Vec<(String, Vec<(f64, f64)>)> = rep
            .targets
            .iter()
            .zip(errors)
            .map(|(t, e)| (t.clone(), e.into_iter().enumerate().map(|(k, v)| (k as f64 * ts, v)).collect()))
            .collect();
        let title = format!("Estimation error, profile {}", first.id());
        staged.bytes(sibling(out, ".errors.svg"), svg::line_chart(&title, "time / s", "error / K", &series, None).as_bytes())?;
    }
    manifest.commit_with(staged, &manifest_path(out))?;
    println!(
        "{} ({} profiles, {} samples): mse {:.4} K², max |error| {:.3} K",
        rep.fold,
        profiles.len(),
        rep.samples,
        rep.mse,
        rep.linf
    );
    if !rep.failed_profiles.is_empty() {
        log::warn!("diverged profiles excluded: {}", rep.failed_profiles.join(", "));
    }
    let mut violations = Vec::new();
    if let Some(max) = ctx.config.checks.max_mse {
        if !(rep.mse <= max) {
            violations.push(format!("mse {:.4} K² exceeds max_mse {max}", rep.mse));
        }
    }
    if let Some(max) = ctx.config.checks.max_linf {
        if !(rep.linf <= max) {
            violations.push(format!("max error {:.4} K exceeds max_linf {max}", rep.linf));
        }
    }
    checks(violations)
}

fn checks(violations: Vec<String>) -> Result<(), CliError> {
    for v in &violations {
        println!("check FAILED: {v}");
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::check(violations.join("; ")))
    }
}

// ---------------------------------------------------------------- prune

#[derive(Serialize)]
struct PruneReport<'a> {
    models: Vec<(String, f64)>,
    profile: &'a tnn_core::analysis::ConductanceProfile,
    threshold: f64,
    pruned: &'a [usize],
    warnings: &'a [String],
    parameters_before: usize,
    parameters_after: usize,
}

pub fn prune(
    ctx: &Ctx,
    data: Option<&Path>,
    model_paths: &[PathBuf],
    threshold: Option<f64>,
    set: Set,
    out: &Path,
) -> Result<(), CliError> {
    let threshold = threshold
        .or(ctx.config.prune.threshold)
        .ok_or_else(|| CliError::config("pruning needs --threshold or `threshold` in [prune]"))?;
    let mut manifest = ctx.manifest("prune")?;
    let models = model_paths
        .iter()
        .map(|p| load_model(p, &mut manifest))
        .collect::<Result<Vec<_>, _>>()?;
    let base = &models[0];
    for (m, p) in models.iter().zip(model_paths).skip(1) {
        if m.topology.gamma != base.topology.gamma || m.schema != base.schema {
            return Err(CliError::config(format!("{}: γ layout or schema differs from the first model", p.display())));
        }
    }
    let profiles = load_profiles(ctx, data, &base.schema, &mut manifest)?;
    let profiles = select(&folds(ctx, &profiles)?, set);
    let scored: Vec<(&TnnModel, f64)> = models
        .par_iter()
        .map(|m| Ok((m, evaluate(m, &profiles, InitMode::GroundTruth)?.mse)))
        .collect::<Result<_, CliError>>()?;
    let cfg = &ctx.config.prune;
    let profile = conductance_medians(&scored, cfg.mse_cutoff, cfg.samples, cfg.seed)?;
    let outcome = prune_topology(&base.topology, &profile, threshold)?;
    for w in &outcome.warnings {
        log::warn!("{w}");
        println!("warning: {w}");
    }
    let before = count_parameters(&base.topology);
    let after = count_parameters(&outcome.topology);

    let rows: Vec<Vec<String>> = profile
        .pairs
        .iter()
        .zip(&profile.medians)
        .enumerate()
        .map(|(slot, ((_, _, a, b), med))| {
            vec![
                slot.to_string(),
                a.clone(),
                b.clone(),
                num(*med),
                outcome.topology.mask.contains(&slot).to_string(),
            ]
        })
        .collect();
    let json = PruneReport {
        models: model_paths.iter().map(|p| p.display().to_string()).zip(scored.iter().map(|s| s.1)).collect(),
        profile: &profile,
        threshold,
        pruned: &outcome.pruned,
        warnings: &outcome.warnings,
        parameters_before: before,
        parameters_after: after,
    };
    let mut staged = Staged::new();
    staged.bytes(out, &report(ctx, &["slot", "node_a", "node_b", "median", "pruned"], &rows, &json)?)?;
    staged.bytes(sibling(out, ".topology.json"), &json_bytes(&outcome.topology)?)?;
    let edges: Vec<(String, String, f64, bool)> = rows
        .iter()
        .zip(&profile.medians)
        .map(|(r, m)| (r[1].clone(), r[2].clone(), *m, r[4] == "true"))
        .collect();
    let title = format!("Median conductances, {} of {} models", profile.models_used, models.len());
    staged.bytes(sibling(out, ".svg"), svg::edge_table(&title, &edges).as_bytes())?;
    manifest.commit_with(staged, &manifest_path(out))?;
    println!(
        "{} of {} models admitted; pruned {} slot(s); parameters {before} -> {after}",
        profile.models_used,
        models.len(),
        outcome.pruned.len()
    );

    let mut violations = Vec::new();
    if let Some([a, b]) = &ctx.config.checks.weakest_pair {
        match profile.weakest(base.topology.targets) {
            Some(slot) => {
                let (_, _, x, y) = &profile.pairs[slot];
                if !((x == a && y == b) || (x == b && y == a)) {
                    violations.push(format!("weakest pair is {x} - {y}, expected {a} - {b}"));
                }
            }
            None => violations.push("no target-target pair to rank".into()),
        }
    }
    checks(violations)
}

// ---------------------------------------------------------------- init-study

pub fn init_study(
    ctx: &Ctx,
    data: Option<&Path>,
    model_path: &Path,
    offsets: Option<&str>,
    band: Option<f64>,
    profile_id: Option<&str>,
    out: &Path,
) -> Result<(), CliError> {
    let cfg = &ctx.config.init_study;
    let offsets: Vec<f64> = match offsets {
        Some(list) => parse_list(list, "offsets")?,
        None => cfg.offsets.clone(),
    };
    let band = band.unwrap_or(cfg.band);
    if offsets.is_empty() || !(band > 0.0) {
        return Err(CliError::config("init-study needs at least one offset and a positive band"));
    }
    let mut manifest = ctx.manifest("init-study")?;
    let model = load_model(model_path, &mut manifest)?;
    let profiles = load_profiles(ctx, data, &model.schema, &mut manifest)?;
    let sets = folds(ctx, &profiles)?;
    let profile = match profile_id.or(cfg.profile.as_deref()) {
        Some(id) => profiles
            .iter()
            .find(|p| p.id() == id)
            .ok_or_else(|| CliError::config(format!("profile `{id}` not found")))?,
        None => &sets.generalization[0],
    };
    let table = detuned_init_study(&model, profile, &offsets, band)?;

    let mut rows = Vec::new();
    for row in &table.rows {
        for (t, name) in table.targets.iter().enumerate() {
            rows.push(vec![
                num(row.offsets[t]),
                name.clone(),
                num(row.recovery[t]),
                row.diverged.to_string(),
            ]);
        }
    }
    let mut staged = Staged::new();
    staged.bytes(out, &report(ctx, &["offset_k", "target", "recovery_s", "diverged"], &rows, &table)?)?;

    let divisors = model.schema.target_divisors()?;
    let truth = profile.targets(0);
    let ts = model.topology.sample_time;
    let mut series = Vec::new();
    for off in &offsets {
        let init: Vec<f64> = truth.iter().zip(&divisors).map(|(y, d)| y + off / d).collect();
        if let Some(errors) = error_series(&model, profile, &init)? {
            let worst: Vec<(f64, f64)> = (0..profile.len())
                .map(|k| {
                    let e = errors.iter().map(|e| e[k]).max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
                    (k as f64 * ts, e)
                })
                .collect();
            series.push((format!("{off:+} K"), worst));
        }
    }
    let title = format!("Largest target error from detuned start, profile {}", profile.id());
    staged.bytes(sibling(out, ".svg"), svg::line_chart(&title, "time / s", "error / K", &series, Some(band)).as_bytes())?;
    manifest.commit_with(staged, &manifest_path(out))?;

    for row in &table.rows {
        let times: Vec<String> = row.recovery.iter().map(|r| format!("{r}")).collect();
        println!("offset {:+} K: recovery {} s{}", row.offsets[0], times.join(" / "), if row.diverged { " (diverged)" } else { "" });
    }
    let mut violations = Vec::new();
    if let Some(max) = ctx.config.checks.max_recovery {
        for row in &table.rows {
            if row.recovery.iter().any(|r| !(*r <= max)) {
                violations.push(format!("offset {:+} K recovers later than {max} s", row.offsets[0]));
            }
        }
    }
    checks(violations)
}

// ---------------------------------------------------------------- grid

pub fn grid(ctx: &Ctx, data: Option<&Path>, budget: Option<usize>, seeds: Option<&str>, out: &Path) -> Result<(), CliError> {
    let mut spec = ctx.config.grid.clone();
    if budget.is_some() {
        spec.budget = budget;
    }
    let seeds: Vec<u64> = match seeds {
        Some(list) => parse_list(list, "seeds")?,
        None => vec![ctx.config.train.seed],
    };
    if seeds.is_empty() {
        return Err(CliError::config("--seeds is empty"));
    }
    let mut manifest = ctx.manifest("grid")?;
    manifest.seeds = seeds.clone();
    let schema = ctx.config.schema().clone();
    let profiles = load_profiles(ctx, data, &schema, &mut manifest)?;
    let sets = folds(ctx, &profiles)?;
    let mut split = sets.split(ctx.config.data.iteration);
    if let Some(len) = ctx.config.train.subsequence_len {
        split = split.with_subsequences(len)?;
    }
    let points: Vec<GridPoint> = grid_search(&spec, &schema, &ctx.config.train, &split, &sets.generalization, &seeds)?;

    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            let c = &p.candidate;
            vec![
                c.pi_layers.to_string(),
                c.pi_units.to_string(),
                c.gamma_layers.to_string(),
                c.gamma_units.to_string(),
                p.parameter_count.to_string(),
                opt(p.mse),
                p.seeds_ok.to_string(),
                p.pareto.to_string(),
                p.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    let header = [
        "pi_layers",
        "pi_units",
        "gamma_layers",
        "gamma_units",
        "parameters",
        "mse_k2",
        "seeds_ok",
        "pareto",
        "error",
    ];
    let mut staged = Staged::new();
    staged.bytes(out, &report(ctx, &header, &rows, &points)?)?;
    let scatter: Vec<(f64, f64, bool)> = points
        .iter()
        .map(|p| (p.parameter_count as f64, p.mse.unwrap_or(f64::NAN), p.pareto))
        .collect();
    let plot = svg::pareto_scatter("Grid search", "parameters", "generalization MSE / K²", &scatter, true);
    staged.bytes(sibling(out, ".svg"), plot.as_bytes())?;
    manifest.commit_with(staged, &manifest_path(out))?;
    let front = points.iter().filter(|p| p.pareto).count();
    println!("{} candidates, {front} on the Pareto front", points.len());
    Ok(())
}

// ---------------------------------------------------------------- inspect

#[derive(Serialize)]
struct ArraySummary {
    name: String,
    shape: Vec<usize>,
    min: f64,
    max: f64,
    rms: f64,
}

#[derive(Serialize)]
struct Inspection {
    kind: &'static str,
    targets: usize,
    ancillary: usize,
    exogenous: usize,
    sample_time: f64,
    pi_layers: Vec<usize>,
    gamma_layers: Vec<usize>,
    dedicated_branches: bool,
    mask: Vec<usize>,
    parameters: usize,
    channels: Option<Vec<String>>,
    kappa: Option<Vec<f64>>,
    arrays: Vec<ArraySummary>,
}

pub fn inspect(path: &Path, out: Option<&Path>, format: Format, argv: &[String]) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let (kind, topology, model) = match TnnModel::from_json(&text) {
        Ok(m) => ("model", m.topology.clone(), Some(m)),
        Err(model_err) => match serde_json::from_str::<TnnTopology>(&text) {
            Ok(t) => ("topology", t, None),
            Err(_) => return Err(CliError::from(model_err).context(path.display())),
        },
    };
    let arrays = model
        .as_ref()
        .map(|m| {
            m.params
                .named_arrays()
                .into_iter()
                .map(|a| {
                    let n = a.data.len().max(1) as f64;
                    ArraySummary {
                        min: a.data.iter().copied().fold(f64::INFINITY, f64::min),
                        max: a.data.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        rms: (a.data.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
                        name: a.name,
                        shape: a.shape,
                    }
                })
                .collect()
        })
        .unwrap_or_default();
    let info = Inspection {
        kind,
        targets: topology.targets,
        ancillary: topology.ancillary,
        exogenous: topology.exogenous,
        sample_time: topology.sample_time,
        pi_layers: topology.pi.layers.iter().map(|l| l.width).collect(),
        gamma_layers: topology.gamma.layers.iter().map(|l| l.width).collect(),
        dedicated_branches: topology.dedicated_branches,
        mask: topology.mask.iter().copied().collect(),
        parameters: count_parameters(&topology),
        channels: model.as_ref().map(|m| m.schema.columns().map(str::to_string).collect()),
        kappa: model.as_ref().map(|m| m.params.kappa()),
        arrays,
    };
    let bytes = match format {
        Format::Json => json_bytes(&info)?,
        Format::Csv => {
            let mut rows = vec![
                vec!["kind".into(), kind.into()],
                vec!["parameters".into(), info.parameters.to_string()],
                vec!["targets".into(), info.targets.to_string()],
                vec!["ancillary".into(), info.ancillary.to_string()],
                vec!["exogenous".into(), info.exogenous.to_string()],
                vec!["sample_time".into(), num(info.sample_time)],
                vec!["pi_layers".into(), join(&info.pi_layers)],
                vec!["gamma_layers".into(), join(&info.gamma_layers)],
                vec!["mask".into(), join(&info.mask)],
            ];
            if let Some(k) = &info.kappa {
                rows.push(vec!["kappa".into(), join(k)]);
            }
            for a in &info.arrays {
                rows.push(vec![
                    format!("array:{}", a.name),
                    format!("shape={} min={} max={} rms={}", join(&a.shape), a.min, a.max, a.rms),
                ]);
            }
            csv_bytes(&["field", "value"], &rows)?
        }
    };
    match out {
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
        Some(out) => {
            let mut manifest = RunManifest::new("inspect", argv, &crate::config::Config::default())?;
            manifest.config = serde_json::Value::Null;
            manifest.input(path)?;
            let mut staged = Staged::new();
            staged.bytes(out, &bytes)?;
            manifest.commit_with(staged, &manifest_path(out))?;
            Ok(())
        }
    }
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}
