use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One editing request: turn the `source_label` object in image `image_id`
/// into a `target_label` object, described by the texts `source_text` and
/// `target_text`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransformQuery {
    pub id: String,
    pub image_id: String,
    pub source_text: String,
    pub target_text: String,
    pub cluster_id: String,
    pub source_label: String,
    pub target_label: String,
}

impl TransformQuery {
    /// Checks the texts; cluster membership is checked against a registry by
    /// the dataset module.
    pub fn validate(&self) -> Result<()> {
        if self.source_text.trim().is_empty() || self.target_text.trim().is_empty() {
            return Err(Error::invalid(format!("query `{}`: empty source or target text", self.id)));
        }
        if self.source_text == self.target_text {
            return Err(Error::invalid(format!(
                "query `{}`: source and target text are both `{}`",
                self.id, self.source_text
            )));
        }
        Ok(())
    }

    /// Ad-hoc query for a single edit outside the benchmark.
    pub fn adhoc(id: impl Into<String>, image_id: impl Into<String>, source: &str, target: &str) -> Self {
        TransformQuery {
            id: id.into(),
            image_id: image_id.into(),
            source_text: source.to_string(),
            target_text: target.to_string(),
            cluster_id: String::new(),
            source_label: source.to_string(),
            target_label: target.to_string(),
        }
    }
}
