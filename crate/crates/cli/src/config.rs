//! Run configuration: a TOML file with `TNN_<SECTION>_<KEY>` environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tnn_core::analysis::GridSpec;
use tnn_core::data::{ChannelSchema, CvIteration, FoldPlan};
use tnn_core::nn::ActivationKind;
use tnn_core::plant::{default_fold_plan, default_plant, PlantSpec};
use tnn_core::tnn::{Approximator, TnnTopology, DEFAULT_DIVERGENCE_BOUND};
use tnn_core::train::TrainConfig;

use crate::error::CliError;

pub const SECTIONS: [&str; 8] = ["data", "model", "train", "plant", "grid", "prune", "init_study", "checks"];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub data: DataSection,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub plant: PlantSection,
    pub grid: GridSpec,
    pub prune: PruneSection,
    pub init_study: InitStudySection,
    pub checks: ChecksSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    /// Profile CSV, or a directory holding `profiles.csv`. Relative to the config file.
    pub csv: Option<PathBuf>,
    /// Falls back to the plant schema.
    pub schema: Option<ChannelSchema>,
    /// Falls back to the synthetic-dataset plan (p0-p3 train, p4, p5, p6-p7).
    /// An empty `train` list takes every profile not named elsewhere.
    pub folds: Option<FoldPlan>,
    pub iteration: CvIteration,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            csv: None,
            schema: None,
            folds: None,
            iteration: CvIteration::First,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub pi: Approximator,
    pub gamma: Approximator,
    pub dedicated_branches: bool,
    pub divergence_bound: f64,
    /// γ slots pinned to zero.
    pub mask: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            pi: Approximator::uniform(1, 4, ActivationKind::Tanh, ActivationKind::Sigmoid),
            gamma: Approximator::uniform(1, 4, ActivationKind::Tanh, ActivationKind::BiasedElu),
            dedicated_branches: false,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            mask: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantSection {
    pub profiles: usize,
    /// Seconds per profile.
    pub duration: f64,
    pub seed: u64,
    pub spec: PlantSpec,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            profiles: 8,
            duration: 900.0,
            seed: 0,
            spec: default_plant(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PruneSection {
    /// Models with generalization MSE (K²) at or above this are ignored.
    pub mse_cutoff: f64,
    pub samples: usize,
    pub seed: u64,
    pub threshold: Option<f64>,
}

impl Default for PruneSection {
    fn default() -> Self {
        Self {
            mse_cutoff: 5.0,
            samples: 1000,
            seed: 0,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitStudySection {
    /// K, applied to every target.
    pub offsets: Vec<f64>,
    /// K
    pub band: f64,
    /// First generalization profile when unset.
    pub profile: Option<String>,
}

impl Default for InitStudySection {
    fn default() -> Self {
        Self {
            offsets: vec![10.0, 20.0, 30.0, -10.0, -20.0, -30.0],
            band: 10.0,
            profile: None,
        }
    }
}

/// Acceptance checks; a violated check makes the command exit with code 5.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksSection {
    /// eval: mean MSE in K²
    pub max_mse: Option<f64>,
    /// eval: max abs error in K
    pub max_linf: Option<f64>,
    /// init-study: seconds, every offset and target
    pub max_recovery: Option<f64>,
    /// prune: node names of the pair expected to rank weakest
    pub weakest_pair: Option<[String; 2]>,
}

impl Config {
    /// Reads `path` (or the defaults when `None`) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let (text, origin) = match path {
            Some(p) => (
                std::fs::read_to_string(p).map_err(|e| CliError::io(format!("{}: {e}", p.display())))?,
                p.display().to_string(),
            ),
            None => (String::new(), "<defaults>".to_string()),
        };
        // Parse the file alone first so errors carry its line and column.
        let mut config: Config = toml::from_str(&text).map_err(|e| CliError::config(format!("{origin}: {e}")))?;
        let mut table: toml::Table = toml::from_str(&text).map_err(|e| CliError::config(format!("{origin}: {e}")))?;
        let overrides = apply_env_overrides(&mut table, std::env::vars())?;
        if !overrides.is_empty() {
            config = table
                .try_into()
                .map_err(|e| CliError::config(format!("{origin} with overrides {}: {e}", overrides.join(", "))))?;
        }
        if let Some(base) = path.and_then(Path::parent) {
            config.resolve_paths(base);
        }
        config.validate()?;
        Ok(config)
    }

    /// A resolved snapshot, as stored in a manifest.
    pub fn from_snapshot(value: serde_json::Value) -> Result<Self, CliError> {
        let config: Config =
            serde_json::from_value(value).map_err(|e| CliError::config(format!("manifest config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(csv) = &self.data.csv {
            if csv.is_relative() {
                let joined = base.join(csv);
                self.data.csv = Some(std::fs::canonicalize(&joined).unwrap_or(joined));
            }
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |key: &str, e: tnn_core::Error| CliError::config(format!("[{key}] {e}"));
        self.train.validate().map_err(|e| cfg("train", e))?;
        self.plant.spec.validate().map_err(|e| cfg("plant.spec", e))?;
        if self.plant.profiles == 0 {
            return Err(CliError::config("[plant] profiles must be positive"));
        }
        if let Some(schema) = &self.data.schema {
            schema.validate().map_err(|e| cfg("data.schema", e))?;
        }
        if let Some(folds) = &self.data.folds {
            folds.assignments().map_err(|e| cfg("data.folds", e))?;
        }
        if !(self.model.divergence_bound > 0.0) {
            return Err(CliError::config("[model] divergence_bound must be positive"));
        }
        if !(self.prune.mse_cutoff > 0.0) || self.prune.samples == 0 {
            return Err(CliError::config("[prune] mse_cutoff and samples must be positive"));
        }
        if !(self.init_study.band > 0.0) {
            return Err(CliError::config("[init_study] band must be positive"));
        }
        Ok(())
    }

    pub fn schema(&self) -> &ChannelSchema {
        self.data.schema.as_ref().unwrap_or(&self.plant.spec.schema)
    }

    pub fn folds(&self) -> FoldPlan {
        self.data.folds.clone().unwrap_or_else(default_fold_plan)
    }

    pub fn topology(&self) -> Result<TnnTopology, CliError> {
        let dims = self.schema().dims();
        let cfg = |e: tnn_core::Error| CliError::config(format!("[model] {e}"));
        let mut topo = TnnTopology::new(
            dims.targets,
            dims.ancillary,
            dims.exogenous,
            self.schema().sample_time,
            &self.model.pi,
            &self.model.gamma,
        )
        .map_err(cfg)?;
        if self.model.dedicated_branches {
            topo = topo.with_dedicated_branches(&self.model.pi).map_err(cfg)?;
        }
        topo.divergence_bound = self.model.divergence_bound;
        topo.with_mask(self.model.mask.iter().copied()).map_err(cfg)
    }
}

/// Writes `TNN_<SECTION>_<KEY>=value` entries into `table[section][key]`.
///
/// Values are read as TOML (`0.01`, `true`, `[1, 2]`) and fall back to plain
/// strings. Variables whose section is unknown are ignored. Returns the
/// applied `section.key` names.
pub fn apply_env_overrides(
    table: &mut toml::Table,
    vars: impl IntoIterator<Item = (String, String)>,
) -> Result<Vec<String>, CliError> {
    let mut applied = Vec::new();
    let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with("TNN_")).collect();
    vars.sort();
    for (name, raw) in vars {
        let rest = name["TNN_".len()..].to_ascii_lowercase();
        let Some(section) = SECTIONS
            .iter()
            .filter(|s| rest.len() > s.len() + 1 && rest.starts_with(*s) && rest.as_bytes()[s.len()] == b'_')
            .max_by_key(|s| s.len())
        else {
            log::debug!("ignoring environment variable {name}");
            continue;
        };
        let key = &rest[section.len() + 1..];
        let value = parse_value(&raw);
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let toml::Value::Table(sec) = entry else {
            return Err(CliError::config(format!("`{section}` is not a table")));
        };
        sec.insert(key.to_string(), value);
        applied.push(format!("{section}.{key} (from {name})"));
    }
    Ok(applied)
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// `1,2,3` into seeds.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| CliError::config(format!("cannot read `{s}` in --{what}"))))
        .collect()
}
