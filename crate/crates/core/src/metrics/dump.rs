//! Feature dumps: row-major little-endian `f32` data with a JSON sidecar
//! `{n, d, labels}`.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::stats::FeatureSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDumpHeader {
    pub n: usize,
    pub d: usize,
    #[serde(default)]
    pub labels: Option<Vec<String>>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `path` (binary) and `path.json` (header).
pub fn write_feature_dump(path: impl AsRef<Path>, fs: &FeatureSet) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = fs.features().iter().flat_map(|&v| (v as f32).to_le_bytes()).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let header = FeatureDumpHeader {
        n: fs.len(),
        d: fs.dim(),
        labels: fs.labels().map(<[String]>::to_vec),
    };
    let side = sidecar(path);
    let mut text = serde_json::to_string_pretty(&header)?;
    text.push('\n');
    std::fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

pub fn read_feature_dump(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let side = sidecar(path);
    let header: FeatureDumpHeader =
        serde_json::from_str(&std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?)?;
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != header.n * header.d * 4 {
        return Err(Error::Schema(format!(
            "{}: {} bytes for a {}x{} f32 matrix",
            path.display(),
            bytes.len(),
            header.n,
            header.d
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("chunk of 4"))))
        .collect();
    let features = Array2::from_shape_vec((header.n, header.d), values).expect("checked length");
    FeatureSet::new(features, header.labels)
}
