//! Outputs are written to temporary files next to their destination and only
//! renamed into place once every file of a command has been produced.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tempfile::NamedTempFile;

use crate::error::CliError;
use crate::manifest::FileDigest;

#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn new() -> Self {
        Self::default()
    }

    fn temp_for(dest: &Path) -> Result<NamedTempFile, CliError> {
        let dir = match dest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))?;
        tempfile::Builder::new()
            .prefix(".tnn-")
            .tempfile_in(&dir)
            .map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
    }

    pub fn bytes(&mut self, dest: impl Into<PathBuf>, data: &[u8]) -> Result<(), CliError> {
        let dest = dest.into();
        let mut tmp = Self::temp_for(&dest)?;
        tmp.write_all(data)
            .and_then(|_| tmp.flush())
            .map_err(|e| CliError::io(format!("{}: {e}", dest.display())))?;
        self.files.push((tmp, dest));
        Ok(())
    }

    /// Stages a file produced by a writer that insists on a path.
    pub fn with_path(
        &mut self,
        dest: impl Into<PathBuf>,
        write: impl FnOnce(&Path) -> tnn_core::Result<()>,
    ) -> Result<(), CliError> {
        let dest = dest.into();
        let tmp = Self::temp_for(&dest)?;
        write(tmp.path()).map_err(|e| CliError::from(e).context(dest.display()))?;
        self.files.push((tmp, dest));
        Ok(())
    }

    pub fn destinations(&self) -> Vec<PathBuf> {
        self.files.iter().map(|(_, d)| d.clone()).collect()
    }

    /// Destination and SHA-256 of every staged file.
    pub fn digests(&self) -> Result<Vec<FileDigest>, CliError> {
        self.files
            .iter()
            .map(|(tmp, dest)| {
                Ok(FileDigest {
                    path: dest.display().to_string(),
                    sha256: sha256_file(tmp.path())?,
                })
            })
            .collect()
    }

    /// Renames every staged file into place.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut done = Vec::with_capacity(self.files.len());
        for (tmp, dest) in self.files {
            // temp files are created 0600
            #[cfg(unix)]
            {
                use std::os::unix::fs::PermissionsExt;
                std::fs::set_permissions(tmp.path(), std::fs::Permissions::from_mode(0o644))?;
            }
            tmp.persist(&dest).map_err(|e| CliError::io(format!("{}: {}", dest.display(), e.error)))?;
            done.push(dest);
        }
        Ok(done)
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `dir/stem{suffix}`, e.g. `model.json` with `.seed3.json` gives `model.seed3.json`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}
