//! Run configuration: a JSON document whose keys can be overridden from the
//! command line with `--set dotted.key=value`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use semtrans_core::backends::SURROGATE_ID;
use semtrans_core::dataset::Split;
use semtrans_core::HyperParams;

use crate::error::{CliError, Result};

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "SEMTRANS_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Cluster table; the shipped table when unset.
    pub registry: Option<PathBuf>,
    /// Image index JSON.
    pub index: Option<PathBuf>,
    /// Query file; queries are built from the registry and index when unset.
    pub queries: Option<PathBuf>,
    /// Run directory holding every artifact.
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            registry: None,
            index: None,
            queries: None,
            output_dir: PathBuf::from("run"),
        }
    }
}

/// Which queries a command processes. Filters combine; `limit` keeps the
/// first queries by id after filtering.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryFilter {
    pub split: Option<Split>,
    pub cluster: Option<String>,
    pub group: Option<String>,
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    /// Seeded linear probe.
    #[default]
    Probe,
    /// Recognizes corpus images by content and knows their labels.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub classifier: ClassifierKind,
    pub classifier_seed: u64,
    pub classifier_grid: usize,
    pub feature_dim: usize,
    pub feature_grid: usize,
    pub feature_seed: u64,
    /// Weight of the standard-deviation term in SFID and CSFID.
    pub alpha: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            classifier: ClassifierKind::Probe,
            classifier_seed: 0,
            classifier_grid: 4,
            feature_dim: 64,
            feature_grid: 8,
            feature_seed: 0,
            alpha: semtrans_core::metrics::DEFAULT_ALPHA,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub queries: u64,
    pub split: u64,
    pub retrieve: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Backend plugin id.
    pub backend: String,
    /// Plugin-specific configuration block.
    pub backend_config: Value,
    /// Keep only the first `n` ensemble members.
    pub ensemble_members: Option<usize>,
    pub hyperparams: HyperParams,
    pub paths: Paths,
    pub filter: QueryFilter,
    /// Update counts at which edits save an intermediate image.
    pub snapshot_steps: Vec<usize>,
    /// Worker threads for per-query work.
    pub workers: usize,
    pub seeds: Seeds,
    pub evaluation: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: SURROGATE_ID.to_string(),
            backend_config: Value::Null,
            ensemble_members: None,
            hyperparams: HyperParams::default(),
            paths: Paths::default(),
            filter: QueryFilter::default(),
            snapshot_steps: Vec::new(),
            workers: 4,
            seeds: Seeds::default(),
            evaluation: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Apply one `dotted.key=value` override. The value is parsed as JSON and
    /// taken as a plain string when that fails.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{assignment}` is not of the form key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let mut slot = &mut doc;
        for part in key.split('.') {
            slot = slot
                .as_object_mut()
                .and_then(|m| m.get_mut(part))
                .ok_or_else(|| CliError::config(format!("unknown config key `{key}`")))?;
        }
        *slot = value;
        *self = serde_json::from_value(doc).map_err(|e| CliError::config(format!("override `{assignment}`: {e}")))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.hyperparams
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        if self.workers == 0 {
            return Err(CliError::config("workers must be at least 1"));
        }
        if let Some(&s) = self.snapshot_steps.iter().find(|&&s| s > self.hyperparams.steps) {
            return Err(CliError::config(format!(
                "snapshot step {s} exceeds step count {}",
                self.hyperparams.steps
            )));
        }
        if self.ensemble_members == Some(0) {
            return Err(CliError::config("ensemble_members must be at least 1"));
        }
        let ev = &self.evaluation;
        if ev.feature_dim == 0 || ev.feature_grid == 0 || ev.classifier_grid == 0 {
            return Err(CliError::config("evaluation feature and grid sizes must be positive"));
        }
        if !(ev.alpha >= 0.0 && ev.alpha.is_finite()) {
            return Err(CliError::config(format!("alpha must be a finite non-negative number, got {}", ev.alpha)));
        }
        Ok(())
    }

    /// SHA-256 of the configuration without the output directory and worker
    /// count, neither of which changes any artifact.
    pub fn hash(&self) -> String {
        let mut doc = serde_json::to_value(self).expect("config serializes");
        doc["paths"]
            .as_object_mut()
            .expect("paths object")
            .remove("output_dir");
        doc.as_object_mut().expect("config object").remove("workers");
        let canonical = serde_json::to_vec(&doc).expect("value serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}
