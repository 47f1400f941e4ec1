use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::{sha256_file, Staged};

pub const FORMAT: &str = "tnn-run-manifest";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Record of one command run, written next to its outputs.
///
/// `argv` and the resolved `config` are enough to replay the run with
/// `tnn replay`; wall-clock data is deliberately absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub command: String,
    pub argv: Vec<String>,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String], config: &crate::config::Config) -> Result<Self, CliError> {
        Ok(Self {
            format: FORMAT.to_string(),
            command: command.to_string(),
            argv: argv.to_vec(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::config(e.to_string()))?,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    /// Records the digests of everything staged so far, stages the manifest
    /// itself at `dest` and commits.
    pub fn commit_with(mut self, mut staged: Staged, dest: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
        self.outputs.extend(staged.digests()?);
        let text = serde_json::to_string_pretty(&self).map_err(|e| CliError::io(e.to_string()))?;
        staged.bytes(dest, text.as_bytes())?;
        staged.commit()
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        let manifest: Self =
            serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        if manifest.format != FORMAT {
            return Err(CliError::config(format!("{}: not a run manifest", path.display())));
        }
        Ok(manifest)
    }
}
