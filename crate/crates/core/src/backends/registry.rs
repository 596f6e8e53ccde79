//! Named backend plugins: string id → constructor.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::augment::AugmentationSpec;
use super::surrogate::SurrogateConfig;
use super::Backends;
use crate::error::{Error, Result};
use crate::params::HyperParams;

pub const SURROGATE_ID: &str = "surrogate";

/// Builds a backend bundle from the plugin's JSON configuration block and the
/// run's hyper-parameters.
pub type BackendConstructor = Arc<dyn Fn(&serde_json::Value, &HyperParams) -> Result<Backends> + Send + Sync>;

#[derive(Clone, Default)]
pub struct BackendRegistry {
    entries: BTreeMap<String, BackendConstructor>,
}

impl BackendRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with the surrogate suite under [`SURROGATE_ID`].
    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register(SURROGATE_ID, Arc::new(build_surrogate))
            .expect("empty registry");
        reg
    }

    pub fn register(&mut self, id: impl Into<String>, ctor: BackendConstructor) -> Result<()> {
        let id = id.into();
        if self.entries.contains_key(&id) {
            return Err(Error::invalid(format!("backend `{id}` is already registered")));
        }
        self.entries.insert(id, ctor);
        Ok(())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn build(&self, id: &str, config: &serde_json::Value, hp: &HyperParams) -> Result<Backends> {
        let ctor = self.entries.get(id).ok_or_else(|| {
            let known: Vec<&str> = self.ids().collect();
            Error::invalid(format!("unknown backend `{id}` (registered: {})", known.join(", ")))
        })?;
        let backends = ctor(config, hp)?;
        backends.ensure_distinct_perceptual()?;
        Ok(backends)
    }
}

impl std::fmt::Debug for BackendRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

/// The autoencoder's native resolution always follows `hp.encode_resolution`.
fn build_surrogate(config: &serde_json::Value, hp: &HyperParams) -> Result<Backends> {
    let mut cfg: SurrogateConfig = if config.is_null() {
        SurrogateConfig::default()
    } else {
        serde_json::from_value(config.clone()).map_err(|e| Error::invalid(format!("surrogate config: {e}")))?
    };
    cfg.resolution = hp.encode_resolution;
    cfg.build()?
        .backends(hp.augmentations, AugmentationSpec::standard(hp.rng_seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_surrogate_builds() {
        let reg = BackendRegistry::with_builtins();
        let hp = HyperParams { encode_resolution: 16, ..Default::default() };
        let b = reg.build(SURROGATE_ID, &serde_json::json!({"seed": 4}), &hp).unwrap();
        assert_eq!(b.autoencoder.native_resolution(), 16);
        assert_eq!(b.ensemble.augmentations(), 8);
    }

    #[test]
    fn unknown_and_duplicate_ids_fail() {
        let mut reg = BackendRegistry::with_builtins();
        assert!(reg.build("clip-vit", &serde_json::Value::Null, &HyperParams::default()).is_err());
        assert!(reg.register(SURROGATE_ID, Arc::new(build_surrogate)).is_err());
        assert!(reg
            .build(SURROGATE_ID, &serde_json::json!({"bogus": 1}), &HyperParams::default())
            .is_err());
    }
}
