use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;

/// Image ids per label for the validation split (query inputs, retrieval
/// pool) and the training split (reference distribution). Ids are paths
/// relative to `root`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageIndex {
    #[serde(skip)]
    pub root: PathBuf,
    pub validation: BTreeMap<String, Vec<String>>,
    pub training: BTreeMap<String, Vec<String>>,
}

impl ImageIndex {
    /// Load an index file; image ids resolve relative to its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut idx: ImageIndex =
            serde_json::from_str(&text).map_err(|e| Error::Schema(format!("image index: {e}")))?;
        idx.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(idx)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validation_images(&self, label: &str) -> &[String] {
        self.validation.get(label).map_or(&[], Vec::as_slice)
    }

    pub fn training_images(&self, label: &str) -> &[String] {
        self.training.get(label).map_or(&[], Vec::as_slice)
    }

    pub fn resolve(&self, image_id: &str) -> PathBuf {
        self.root.join(image_id)
    }

    pub fn load_image(&self, image_id: &str) -> Result<Image> {
        Image::load_png(self.resolve(image_id))
    }

    /// Fails with the first label of `labels` lacking a validation image.
    pub fn ensure_validation_coverage<'a>(&self, labels: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for label in labels {
            if self.validation_images(label).is_empty() {
                return Err(Error::MissingData(format!("label `{label}` has no validation image")));
            }
        }
        Ok(())
    }
}
