use std::collections::{BTreeSet, HashMap};

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::image::{resize, Image};
use crate::resample::SpatialMap;
use crate::rng;

/// Scores an image against every label of a fixed vocabulary.
pub trait Classifier: Send + Sync {
    fn vocabulary(&self) -> &[String];
    fn logits(&self, image: &Image) -> Result<Vec<f64>>;
}

/// Index of the largest logit among `subset` (vocabulary indices). Ties go to
/// the lowest index.
pub fn restricted_argmax(logits: &[f64], subset: &BTreeSet<usize>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &i in subset {
        let v = logits[i];
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn vocabulary_index(clf: &dyn Classifier) -> HashMap<&str, usize> {
    clf.vocabulary().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect()
}

/// Percentage of `images` whose highest logit within `subset` belongs to the
/// image's target label; logits outside the subset are ignored.
pub fn restricted_accuracy(
    images: &[Image],
    targets: &[String],
    clf: &dyn Classifier,
    subset: &BTreeSet<String>,
) -> Result<f64> {
    if images.len() != targets.len() {
        return Err(Error::invalid(format!("{} images for {} targets", images.len(), targets.len())));
    }
    if images.is_empty() {
        return Err(Error::invalid("accuracy of an empty image list"));
    }
    let vocab = vocabulary_index(clf);
    let subset_idx: BTreeSet<usize> = subset
        .iter()
        .map(|l| {
            vocab
                .get(l.as_str())
                .copied()
                .ok_or_else(|| Error::invalid(format!("subset label `{l}` not in classifier vocabulary")))
        })
        .collect::<Result<_>>()?;
    let mut hits = 0usize;
    for (image, target) in images.iter().zip(targets) {
        if !subset.contains(target) {
            return Err(Error::invalid(format!("target `{target}` is outside the label subset")));
        }
        let logits = clf.logits(image)?;
        if logits.len() != vocab.len() {
            return Err(Error::Backend(format!(
                "classifier returned {} logits for a vocabulary of {}",
                logits.len(),
                vocab.len()
            )));
        }
        if restricted_argmax(&logits, &subset_idx) == Some(vocab[target.as_str()]) {
            hits += 1;
        }
    }
    Ok(100.0 * hits as f64 / images.len() as f64)
}

/// Seeded linear probe over an area-pooled thumbnail.
#[derive(Debug, Clone)]
pub struct LinearProbeClassifier {
    vocabulary: Vec<String>,
    resolution: usize,
    pool: SpatialMap,
    weights: Array2<f64>,
}

impl LinearProbeClassifier {
    pub fn new(vocabulary: Vec<String>, seed: u64, resolution: usize, grid: usize) -> Result<Self> {
        if vocabulary.is_empty() {
            return Err(Error::invalid("classifier vocabulary is empty"));
        }
        if grid == 0 || grid > resolution {
            return Err(Error::invalid(format!("probe grid {grid} must be in 1..={resolution}")));
        }
        let inputs = grid * grid * 3;
        let mut rng = rng::keyed_rng(&[seed, 0xC1A5]);
        let weights = Array2::from_shape_simple_fn((vocabulary.len(), inputs), || rng.sample::<f64, _>(StandardNormal));
        Ok(LinearProbeClassifier {
            vocabulary,
            resolution,
            pool: SpatialMap::area_pool((resolution, resolution), (grid, grid)),
            weights,
        })
    }
}

impl Classifier for LinearProbeClassifier {
    fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    fn logits(&self, image: &Image) -> Result<Vec<f64>> {
        let img = resize(image, self.resolution, self.resolution)?;
        let pooled = self.pool.apply(img.as_array());
        let flat = pooled.as_standard_layout().into_owned().into_shape_with_order(self.weights.ncols()).expect("flat");
        Ok(self.weights.dot(&flat).to_vec())
    }
}

/// Classifier that knows the label of every image it was built with, keyed by
/// the image's 8-bit content. Known images get logit 1 on their label, all
/// other logits (and every logit of unknown images) are 0.
#[derive(Debug, Clone)]
pub struct OracleClassifier {
    vocabulary: Vec<String>,
    known: HashMap<[u8; 32], usize>,
}

fn content_key(image: &Image) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((image.height() as u64).to_le_bytes());
    hasher.update((image.width() as u64).to_le_bytes());
    let bytes: Vec<u8> = image.pixels().iter().map(|v| (v * 255.0).round() as u8).collect();
    hasher.update(&bytes);
    hasher.finalize().into()
}

impl OracleClassifier {
    pub fn new(vocabulary: Vec<String>) -> Self {
        OracleClassifier {
            vocabulary,
            known: HashMap::new(),
        }
    }

    pub fn insert(&mut self, image: &Image, label: &str) -> Result<()> {
        let idx = self
            .vocabulary
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::invalid(format!("label `{label}` not in vocabulary")))?;
        self.known.insert(content_key(image), idx);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }
}

impl Classifier for OracleClassifier {
    fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    fn logits(&self, image: &Image) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.vocabulary.len()];
        if let Some(&i) = self.known.get(&content_key(image)) {
            out[i] = 1.0;
        }
        Ok(out)
    }
}
