//! Concatenating multi-encoder embedder with augmentation averaging.
//!
//! For every member the image is embedded under `d` fresh augmentations (or
//! once, unaugmented, when `d = 0`), the embeddings are averaged, the mean is
//! ℓ2-normalized and the per-member results are concatenated in member order.
//! The concatenation itself is not renormalized. Texts follow the same path
//! without augmentation.

use std::sync::Arc;

use ndarray::Array3;

use super::augment::{augmentation_map, AugmentationSpec};
use super::{ImageEmbedder, TextEncoder};
use crate::embedding::{normalize_slice, normalize_vjp, EmbeddingVector};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::resample::SpatialMap;
use crate::rng;

/// A matched pair of image and text encoders sharing one embedding space.
#[derive(Clone)]
pub struct EnsembleMember {
    pub image: Arc<dyn ImageEmbedder>,
    pub text: Arc<dyn TextEncoder>,
}

impl EnsembleMember {
    pub fn new(image: Arc<dyn ImageEmbedder>, text: Arc<dyn TextEncoder>) -> Self {
        EnsembleMember { image, text }
    }

    pub fn dim(&self) -> usize {
        self.image.embed_dim()
    }
}

#[derive(Clone)]
pub struct EnsembleEmbedder {
    members: Vec<EnsembleMember>,
    augmentations: usize,
    spec: AugmentationSpec,
    normalize_members: bool,
}

impl std::fmt::Debug for EnsembleEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let names: Vec<&str> = self.members.iter().map(|m| m.image.name()).collect();
        f.debug_struct("EnsembleEmbedder")
            .field("members", &names)
            .field("augmentations", &self.augmentations)
            .field("spec", &self.spec)
            .field("normalize_members", &self.normalize_members)
            .finish()
    }
}

impl EnsembleEmbedder {
    pub fn new(members: Vec<EnsembleMember>, augmentations: usize, spec: AugmentationSpec) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("ensemble needs at least one member"));
        }
        for m in &members {
            if m.image.embed_dim() != m.text.embed_dim() {
                return Err(Error::invalid(format!(
                    "member `{}`: image dim {} != text dim {}",
                    m.image.name(),
                    m.image.embed_dim(),
                    m.text.embed_dim()
                )));
            }
            if m.image.embed_dim() == 0 || m.image.input_resolution() == 0 {
                return Err(Error::invalid(format!("member `{}` has an empty shape", m.image.name())));
            }
        }
        Ok(EnsembleEmbedder {
            members,
            augmentations,
            spec,
            normalize_members: true,
        })
    }

    pub fn with_augmentations(mut self, augmentations: usize) -> Self {
        self.augmentations = augmentations;
        self
    }

    pub fn with_spec(mut self, spec: AugmentationSpec) -> Self {
        self.spec = spec;
        self
    }

    /// Skip the per-member ℓ2 normalization. With linear members this makes
    /// the embedding loss an ordinary linear least-squares objective.
    pub fn without_member_normalization(mut self) -> Self {
        self.normalize_members = false;
        self
    }

    /// Keep only the first `n` members.
    pub fn truncated(mut self, n: usize) -> Result<Self> {
        if n == 0 || n > self.members.len() {
            return Err(Error::invalid(format!(
                "cannot keep {n} of {} ensemble members",
                self.members.len()
            )));
        }
        self.members.truncate(n);
        Ok(self)
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn augmentations(&self) -> usize {
        self.augmentations
    }

    pub fn spec(&self) -> &AugmentationSpec {
        &self.spec
    }

    pub fn normalizes_members(&self) -> bool {
        self.normalize_members
    }

    pub fn total_dim(&self) -> usize {
        self.members.iter().map(EnsembleMember::dim).sum()
    }

    fn provenance(&self) -> Vec<String> {
        self.members.iter().map(|m| m.image.name().to_string()).collect()
    }

    fn finish_member(&self, v: Vec<f64>) -> Result<Vec<f64>> {
        if self.normalize_members {
            normalize_slice(&v)
        } else {
            Ok(v)
        }
    }

    /// Embed `text` with every member and concatenate.
    pub fn embed_text(&self, text: &str) -> Result<EmbeddingVector> {
        if text.trim().is_empty() {
            return Err(Error::invalid("text must be non-empty"));
        }
        let mut values = Vec::with_capacity(self.total_dim());
        for m in &self.members {
            let v = m.text.encode_text(text)?;
            if v.len() != m.dim() {
                return Err(Error::Backend(format!(
                    "text encoder `{}` returned {} values, expected {}",
                    m.text.name(),
                    v.len(),
                    m.dim()
                )));
            }
            values.extend(self.finish_member(v)?);
        }
        Ok(EmbeddingVector {
            values,
            provenance: self.provenance(),
        })
    }

    /// Embed `image`, keeping what is needed to back-propagate. Augmentation
    /// `k` of member `m` uses draw index `key(draw_base, m, k)`.
    pub fn embed_image(&self, image: &Image, draw_base: u64) -> Result<ImageEmbedding> {
        let mut values = Vec::with_capacity(self.total_dim());
        let mut traces = Vec::with_capacity(self.members.len());
        let n_views = self.augmentations.max(1);
        for (m, member) in self.members.iter().enumerate() {
            let r = member.image.input_resolution();
            let resize_map = (image.dims() != (r, r)).then(|| SpatialMap::resize(image.dims(), (r, r)));
            let mut views = Vec::with_capacity(n_views);
            let mut sum = vec![0.0; member.dim()];
            for k in 0..n_views {
                let aug_map = if self.augmentations == 0 {
                    None
                } else {
                    let draw = rng::augmentation_draw(draw_base, m as u64, k as u64);
                    Some(augmentation_map(image.dims(), &self.spec, draw)).filter(|map| !map.is_identity())
                };
                let mut input = match &aug_map {
                    Some(map) => image.warp(map),
                    None => image.clone(),
                };
                if let Some(map) = &resize_map {
                    input = input.warp(map);
                }
                let e = member.image.encode_image(&input)?;
                if e.len() != member.dim() {
                    return Err(Error::Backend(format!(
                        "image encoder `{}` returned {} values, expected {}",
                        member.image.name(),
                        e.len(),
                        member.dim()
                    )));
                }
                for (s, v) in sum.iter_mut().zip(&e) {
                    *s += v;
                }
                views.push(View { aug_map, input });
            }
            let mean: Vec<f64> = sum.iter().map(|s| s / n_views as f64).collect();
            values.extend(self.finish_member(mean.clone())?);
            traces.push(MemberTrace { resize_map, views, mean });
        }
        Ok(ImageEmbedding {
            vector: EmbeddingVector {
                values,
                provenance: self.provenance(),
            },
            input_dims: image.dims(),
            traces,
        })
    }
}

struct View {
    aug_map: Option<SpatialMap>,
    input: Image,
}

struct MemberTrace {
    resize_map: Option<SpatialMap>,
    views: Vec<View>,
    mean: Vec<f64>,
}

/// Output of [`EnsembleEmbedder::embed_image`] with its backward pass.
pub struct ImageEmbedding {
    pub vector: EmbeddingVector,
    input_dims: (usize, usize),
    traces: Vec<MemberTrace>,
}

impl ImageEmbedding {
    /// Gradient with respect to the embedded image's pixels of
    /// `⟨grad, vector⟩`. `ensemble` must be the embedder that produced `self`.
    pub fn backward(&self, ensemble: &EnsembleEmbedder, grad: &[f64]) -> Result<Array3<f64>> {
        if grad.len() != self.vector.dim() {
            return Err(Error::invalid(format!(
                "gradient has {} entries, embedding has {}",
                grad.len(),
                self.vector.dim()
            )));
        }
        let (h, w) = self.input_dims;
        let mut out = Array3::zeros((h, w, 3));
        let mut offset = 0;
        for (member, trace) in ensemble.members.iter().zip(&self.traces) {
            let dim = member.dim();
            let g = &grad[offset..offset + dim];
            offset += dim;
            let g_mean = if ensemble.normalize_members {
                normalize_vjp(&trace.mean, g)
            } else {
                g.to_vec()
            };
            let scale = 1.0 / trace.views.len() as f64;
            let g_view: Vec<f64> = g_mean.iter().map(|v| v * scale).collect();
            for view in &trace.views {
                let mut gx = member.image.encode_image_vjp(&view.input, &g_view)?;
                if let Some(map) = &trace.resize_map {
                    gx = map.apply_transpose(&gx);
                }
                if let Some(map) = &view.aug_map {
                    gx = map.apply_transpose(&gx);
                }
                out += &gx;
            }
        }
        Ok(out)
    }
}

pub fn ensemble_embed_image(image: &Image, e: &EnsembleEmbedder, draw_base: u64) -> Result<EmbeddingVector> {
    Ok(e.embed_image(image, draw_base)?.vector)
}

pub fn ensemble_embed_text(text: &str, e: &EnsembleEmbedder) -> Result<EmbeddingVector> {
    e.embed_text(text)
}
