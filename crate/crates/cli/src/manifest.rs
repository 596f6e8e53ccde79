//! Self-describing run directories: every written artifact is listed in
//! `manifest.json` with its content hash and the hash of the producing
//! configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub sha256: String,
    pub config_hash: String,
    pub command: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Keyed by path relative to the run directory, `/`-separated.
    pub artifacts: BTreeMap<String, Artifact>,
}

impl Manifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Core(semtrans_core::Error::Schema(format!("manifest: {e}"))))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writer for one command's artifacts inside a run directory.
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    config_hash: String,
    command: String,
    manifest: Manifest,
}

impl RunDir {
    pub fn open(root: impl Into<PathBuf>, config_hash: &str, command: &str) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        let manifest = Manifest::load(&root)?;
        Ok(RunDir {
            root,
            config_hash: config_hash.to_string(),
            command: command.to_string(),
            manifest,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Write `bytes` to `rel` (relative, `/`-separated) and record it.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.manifest.artifacts.insert(
            rel.to_string(),
            Artifact {
                sha256: sha256_hex(bytes),
                config_hash: self.config_hash.clone(),
                command: self.command.clone(),
            },
        );
        Ok(path)
    }

    /// Record a file that already exists under the run directory.
    pub fn record(&mut self, rel: &str) -> Result<()> {
        let path = self.root.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        self.manifest.artifacts.insert(
            rel.to_string(),
            Artifact {
                sha256: sha256_hex(&bytes),
                config_hash: self.config_hash.clone(),
                command: self.command.clone(),
            },
        );
        Ok(())
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    /// Persist the manifest.
    pub fn finish(self) -> Result<Manifest> {
        let path = self.root.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}
