use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight of the standard-deviation term in [`sfid`]; the mean term alone is
/// used by default.
pub const DEFAULT_ALPHA: f64 = 0.0;

/// A matrix of feature rows with an optional label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    features: Array2<f64>,
    labels: Option<Vec<String>>,
}

impl FeatureSet {
    pub fn new(features: Array2<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature set contains non-finite values"));
        }
        if let Some(l) = &labels {
            if l.len() != features.nrows() {
                return Err(Error::invalid(format!(
                    "{} labels for {} feature rows",
                    l.len(),
                    features.nrows()
                )));
            }
        }
        Ok(FeatureSet { features, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Vec<String>>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("feature rows have different lengths"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let features = Array2::from_shape_vec((rows.len(), d), flat).expect("row-major shape");
        FeatureSet::new(features, labels)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Rows grouped by label, labels in sorted order.
    pub fn by_label(&self) -> Result<BTreeMap<&str, FeatureSet>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::invalid("feature set has no labels"))?;
        let mut rows: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            rows.entry(l.as_str()).or_default().push(i);
        }
        rows.into_iter()
            .map(|(l, idx)| {
                let subset = self.features.select(Axis(0), &idx);
                Ok((l, FeatureSet::new(subset, Some(vec![l.to_string(); idx.len()]))?))
            })
            .collect()
    }
}

/// Per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Mean and population (divisor N) standard deviation of every feature
/// dimension, accumulated in one pass with Welford's update.
pub fn feature_stats(fs: &FeatureSet) -> Result<FeatureStats> {
    if fs.is_empty() {
        return Err(Error::invalid("feature statistics of an empty set"));
    }
    let d = fs.dim();
    let mut mean = Array1::<f64>::zeros(d);
    let mut m2 = Array1::<f64>::zeros(d);
    for (k, row) in fs.features.rows().into_iter().enumerate() {
        let n = (k + 1) as f64;
        for j in 0..d {
            let delta = row[j] - mean[j];
            mean[j] += delta / n;
            m2[j] += delta * (row[j] - mean[j]);
        }
    }
    let n = fs.len() as f64;
    Ok(FeatureStats {
        mean: mean.to_vec(),
        std: m2.iter().map(|v| (v.max(0.0) / n).sqrt()).collect(),
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Simplified FID: `‖μ_r − μ_s‖² + α ‖σ_r − σ_s‖²`, ignoring covariances.
pub fn sfid(real: &FeatureSet, synth: &FeatureSet, alpha: f64) -> Result<f64> {
    if real.dim() != synth.dim() {
        return Err(Error::invalid(format!(
            "feature dimensions differ: {} vs {}",
            real.dim(),
            synth.dim()
        )));
    }
    let r = feature_stats(real)?;
    let s = feature_stats(synth)?;
    let mean_term = squared_distance(&r.mean, &s.mean);
    if alpha == 0.0 {
        return Ok(mean_term);
    }
    Ok(mean_term + alpha * squared_distance(&r.std, &s.std))
}

/// Class-conditional SFID: [`sfid`] between the real and synthetic rows of
/// each label present in `synth`, averaged over those labels.
pub fn csfid(real: &FeatureSet, synth: &FeatureSet, alpha: f64) -> Result<f64> {
    let real_by = real.by_label()?;
    let synth_by = synth.by_label()?;
    if synth_by.is_empty() {
        return Err(Error::invalid("class-conditional SFID of an empty synthetic set"));
    }
    let mut total = 0.0;
    for (label, s) in &synth_by {
        let r = real_by
            .get(label)
            .ok_or_else(|| Error::MissingReference(label.to_string()))?;
        total += sfid(r, s, alpha)?;
    }
    Ok(total / synth_by.len() as f64)
}
