//! `tnn`: simulate, train, evaluate and analyze thermal neural networks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod manifest;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Parser, Debug)]
#[command(name = "tnn", version, about = "Thermal neural network workflows")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for seed and grid fan-out (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Log progress to stderr
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Profile set selected for evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Set {
    Train,
    Fold1,
    Fold2,
    Generalization,
    All,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset from the plant in `[plant]`
    Simulate {
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train one model per seed
    Train {
        /// Profile CSV or a directory with `profiles.csv`
        #[arg(long)]
        data: Option<PathBuf>,
        /// Model file; several seeds get `.seedN` inserted before the extension
        #[arg(long)]
        out: PathBuf,
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Comma-separated seeds, trained in parallel
        #[arg(long)]
        seeds: Option<String>,
        /// Topology JSON (e.g. from `prune`) replacing `[model]`
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Validate config and data, print the parameter count, train nothing
        #[arg(long)]
        dry_run: bool,
    },
    /// Score a model on a profile set
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Set::Generalization)]
        set: Set,
        /// ground_truth, ambient, or a temperature in °C
        #[arg(long, default_value = "ground_truth", allow_hyphen_values = true)]
        init: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank conductances over trained models and mask the weak ones
    Prune {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Comma-separated model files
        #[arg(long, value_delimiter = ',', required = true)]
        models: Vec<PathBuf>,
        /// Conductances with median strictly below this are masked
        #[arg(long)]
        threshold: Option<f64>,
        /// Set on which model MSEs are measured against `[prune] mse_cutoff`
        #[arg(long, value_enum, default_value_t = Set::Generalization)]
        set: Set,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recovery time from detuned initial states
    InitStudy {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated offsets in K
        #[arg(long, allow_hyphen_values = true)]
        offsets: Option<String>,
        /// Error band in K
        #[arg(long)]
        band: Option<f64>,
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Architecture grid search with Pareto front
    Grid {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Number of sampled candidates
        #[arg(long)]
        budget: Option<usize>,
        /// Comma-separated seeds per candidate
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a model or topology file
    Inspect {
        /// Model or topology JSON
        path: PathBuf,
        /// Write the summary here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run a command from its manifest
    Replay { manifest: PathBuf },
}

pub struct Ctx {
    pub config: Config,
    /// Arguments after the program name, as recorded in manifests.
    pub argv: Vec<String>,
    pub format: Format,
}

impl Ctx {
    pub fn manifest(&self, command: &str) -> Result<RunManifest, CliError> {
        RunManifest::new(command, &self.argv, &self.config)
    }
}

fn run(cli: Cli, argv: Vec<String>, snapshot: Option<serde_json::Value>) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::config("--jobs must be positive"));
        }
        // a replayed command may try to set it again
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    if let Command::Replay { manifest } = &cli.command {
        if snapshot.is_some() {
            return Err(CliError::config("a manifest cannot replay another replay"));
        }
        let m = RunManifest::load(manifest)?;
        let mut full = vec!["tnn".to_string()];
        full.extend(m.argv.iter().cloned());
        let inner = Cli::try_parse_from(&full).map_err(|e| CliError::config(format!("manifest argv: {e}")))?;
        log::info!("replaying `{}`", m.command);
        return run(inner, m.argv, Some(m.config));
    }
    if let Command::Inspect { path, out } = &cli.command {
        return commands::inspect(path, out.as_deref(), cli.format, &argv);
    }
    let config = match snapshot {
        Some(value) => Config::from_snapshot(value)?,
        None => Config::load(cli.config.as_deref())?,
    };
    let ctx = Ctx { config, argv, format: cli.format };
    match cli.command {
        Command::Simulate { out, seed } => commands::simulate(&ctx, &out, seed),
        Command::Train { data, out, seed, seeds, topology, dry_run } => commands::train(
            &ctx,
            commands::TrainArgs {
                data: data.as_deref(),
                out: &out,
                seed,
                seeds: seeds.as_deref(),
                topology: topology.as_deref(),
                dry_run,
            },
        ),
        Command::Eval { data, model, set, init, out } => commands::eval(&ctx, data.as_deref(), &model, set, &init, &out),
        Command::Prune { data, models, threshold, set, out } => {
            commands::prune(&ctx, data.as_deref(), &models, threshold, set, &out)
        }
        Command::InitStudy { data, model, offsets, band, profile, out } => commands::init_study(
            &ctx,
            data.as_deref(),
            &model,
            offsets.as_deref(),
            band,
            profile.as_deref(),
            &out,
        ),
        Command::Grid { data, budget, seeds, out } => {
            commands::grid(&ctx, data.as_deref(), budget, seeds.as_deref(), &out)
        }
        Command::Inspect { .. } | Command::Replay { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli, argv[1..].to_vec(), None) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
