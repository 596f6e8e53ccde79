use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::index::ImageIndex;
use super::registry::ClusterRegistry;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng;

/// Shape of a synthetic image corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub val_per_label: usize,
    pub train_per_label: usize,
    pub size: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            val_per_label: 2,
            train_per_label: 4,
            size: 32,
            seed: 0,
        }
    }
}

/// Directory-safe form of a label.
fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn label_key(label: &str) -> u64 {
    let digest = Sha256::digest(label.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest length"))
}

/// Colour pattern shared by all images of a label.
struct Prototype {
    base: [f64; 3],
    stripe: [f64; 3],
    freq: (f64, f64),
}

impl Prototype {
    fn new(seed: u64, label: &str) -> Self {
        let mut r = rng::keyed_rng(&[seed, 0xF1C7, label_key(label)]);
        let mut colour = || [0; 3].map(|_: i32| r.random_range(0.2..0.8));
        let base = colour();
        let stripe = colour();
        let freq = (r.random_range(0.5..3.0), r.random_range(0.5..3.0));
        Prototype { base, stripe, freq }
    }

    fn render(&self, size: usize, seed: u64, noise: f64) -> Result<Image> {
        let mut r = rng::keyed_rng(&[seed]);
        let jitter = Normal::new(0.0, noise).expect("positive std");
        let phase: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let s = size as f64;
        let mut sample = move || jitter.sample(&mut r);
        let pixels = ndarray::Array3::from_shape_fn((size, size, 3), |(y, x, c)| {
            let t = ((self.freq.0 * y as f64 + self.freq.1 * x as f64) / s * std::f64::consts::TAU + phase).sin();
            let w = 0.5 + 0.5 * t;
            ((1.0 - w) * self.base[c] + w * self.stripe[c]).clamp(0.0, 1.0)
        });
        let mut pixels = pixels;
        pixels.mapv_inplace(|v| v + sample());
        Image::clamped(pixels)
    }
}

/// Write a synthetic labelled corpus under `dir` and return its index, which
/// is also saved as `dir/index.json`.
///
/// Images are PNGs at `images/{val,train}/<label>/<k>.png`. Every label gets
/// its own stripe pattern so that images of one label look alike.
pub fn generate_fixture_corpus(dir: impl AsRef<Path>, registry: &ClusterRegistry, spec: FixtureSpec) -> Result<ImageIndex> {
    if spec.size == 0 || spec.val_per_label == 0 {
        return Err(Error::invalid("fixture size and validation count must be positive"));
    }
    let dir = dir.as_ref();
    let mut index = ImageIndex {
        root: dir.to_path_buf(),
        ..ImageIndex::default()
    };
    for label in registry.labels() {
        let proto = Prototype::new(spec.seed, label);
        let lk = label_key(label);
        for (split, count, tag) in [("val", spec.val_per_label, 0u64), ("train", spec.train_per_label, 1)] {
            let sub = dir.join("images").join(split).join(slug(label));
            std::fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
            let mut ids = Vec::with_capacity(count);
            for k in 0..count {
                let id = format!("images/{split}/{}/{k}.png", slug(label));
                proto
                    .render(spec.size, rng::key(&[spec.seed, lk, tag, k as u64]), 0.03)?
                    .save_png(dir.join(&id))?;
                ids.push(id);
            }
            let map = if tag == 0 { &mut index.validation } else { &mut index.training };
            map.insert(label.to_string(), ids);
        }
    }
    index.save(dir.join("index.json"))?;
    Ok(index)
}
