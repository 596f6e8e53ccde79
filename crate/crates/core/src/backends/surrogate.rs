//! Deterministic stand-ins for the pretrained networks.
//!
//! They are small enough to run thousands of optimizer steps in a unit test
//! and simple enough (linear or quadratic) that every gradient can be checked
//! against finite differences and some objectives have closed-form minimizers.

use std::sync::Arc;

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::augment::AugmentationSpec;
use super::ensemble::{EnsembleEmbedder, EnsembleMember};
use super::{Autoencoder, Backends, ImageEmbedder, PerceptualDistance, TextEncoder};
use crate::error::{Error, Result};
use crate::image::{resize, Image};
use crate::latent::{LatentCode, LatentShape};
use crate::resample::SpatialMap;
use crate::rng;

/// Text encoder mapping each string to a Gaussian vector seeded by a hash of
/// the string.
#[derive(Debug, Clone)]
pub struct HashTextEncoder {
    name: String,
    seed: u64,
    dim: usize,
}

impl HashTextEncoder {
    pub fn new(name: impl Into<String>, seed: u64, dim: usize) -> Self {
        HashTextEncoder {
            name: name.into(),
            seed,
            dim,
        }
    }
}

impl TextEncoder for HashTextEncoder {
    fn name(&self) -> &str {
        &self.name
    }

    fn embed_dim(&self) -> usize {
        self.dim
    }

    fn encode_text(&self, text: &str) -> Result<Vec<f64>> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        let text_key = u64::from_le_bytes(digest[..8].try_into().expect("digest length"));
        let mut rng = rng::keyed_rng(&[self.seed, text_key]);
        Ok((0..self.dim).map(|_| rng.sample(StandardNormal)).collect())
    }
}

/// Affine image embedder: average-pool to a `grid × grid` image, subtract
/// mid-grey, flatten and apply a seeded matrix with orthonormal rows plus a
/// small seeded bias.
#[derive(Debug, Clone)]
pub struct LinearImageEmbedder {
    name: String,
    resolution: usize,
    pool: SpatialMap,
    matrix: Array2<f64>,
    bias: Vec<f64>,
}

impl LinearImageEmbedder {
    pub fn new(name: impl Into<String>, seed: u64, dim: usize, resolution: usize, grid: usize) -> Result<Self> {
        let inputs = grid * grid * 3;
        if grid == 0 || resolution < grid {
            return Err(Error::invalid(format!("pool grid {grid} must be in 1..={resolution}")));
        }
        if dim == 0 || dim > inputs {
            return Err(Error::invalid(format!("embedding dim {dim} must be in 1..={inputs}")));
        }
        let mut rng = rng::keyed_rng(&[seed, 0x11]);
        let mut matrix = Array2::from_shape_simple_fn((dim, inputs), || rng.sample::<f64, _>(StandardNormal));
        // Gram-Schmidt on the rows
        for i in 0..dim {
            for j in 0..i {
                let proj = matrix.row(i).dot(&matrix.row(j));
                let rj = matrix.row(j).to_owned();
                matrix.row_mut(i).scaled_add(-proj, &rj);
            }
            let n = matrix.row(i).dot(&matrix.row(i)).sqrt();
            matrix.row_mut(i).mapv_inplace(|v| v / n);
        }
        let bias = (0..dim).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
        Ok(LinearImageEmbedder {
            name: name.into(),
            resolution,
            pool: SpatialMap::area_pool((resolution, resolution), (grid, grid)),
            matrix,
            bias,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn check(&self, image: &Image) -> Result<()> {
        if image.dims() != (self.resolution, self.resolution) {
            return Err(Error::invalid(format!(
                "`{}` expects {r}x{r} input, got {:?}",
                self.name,
                image.dims(),
                r = self.resolution
            )));
        }
        Ok(())
    }
}

impl ImageEmbedder for LinearImageEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn embed_dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn input_resolution(&self) -> usize {
        self.resolution
    }

    fn encode_image(&self, image: &Image) -> Result<Vec<f64>> {
        self.check(image)?;
        let pooled = self.pool.apply(image.as_array()) - 0.5;
        let flat = pooled.as_standard_layout().into_owned().into_shape_with_order(self.matrix.ncols()).expect("flat");
        let out = self.matrix.dot(&flat);
        Ok(out.iter().zip(&self.bias).map(|(a, b)| a + b).collect())
    }

    fn encode_image_vjp(&self, image: &Image, grad: &[f64]) -> Result<Array3<f64>> {
        self.check(image)?;
        if grad.len() != self.embed_dim() {
            return Err(Error::invalid("gradient length does not match embedding dim"));
        }
        let g = ndarray::ArrayView1::from(grad);
        let flat = self.matrix.t().dot(&g);
        let (gh, gw) = self.pool.out_dims();
        let pooled = flat.into_shape_with_order((gh, gw, 3)).expect("pooled shape");
        Ok(self.pool.apply_transpose(&pooled))
    }
}

fn hwc_to_chw(a: &Array3<f64>) -> Array3<f64> {
    a.view().permuted_axes([2, 0, 1]).as_standard_layout().into_owned()
}

fn chw_to_hwc(a: &Array3<f64>) -> Array3<f64> {
    a.view().permuted_axes([1, 2, 0]).as_standard_layout().into_owned()
}

/// Latent = pixels in channel-first layout; reconstruction is exact. Selecting
/// it turns latent optimization into pixel-space optimization.
#[derive(Debug, Clone)]
pub struct IdentityAutoencoder {
    resolution: usize,
}

impl IdentityAutoencoder {
    pub fn new(resolution: usize) -> Self {
        IdentityAutoencoder { resolution }
    }
}

impl Autoencoder for IdentityAutoencoder {
    fn name(&self) -> &str {
        "identity"
    }

    fn latent_shape(&self) -> LatentShape {
        LatentShape::new(3, self.resolution, self.resolution)
    }

    fn native_resolution(&self) -> usize {
        self.resolution
    }

    fn encode(&self, image: &Image) -> Result<LatentCode> {
        let img = resize(image, self.resolution, self.resolution)?;
        LatentCode::new(hwc_to_chw(img.as_array()))
    }

    fn decode(&self, z: &LatentCode) -> Result<Image> {
        z.ensure_shape(self.latent_shape())?;
        Image::clamped(chw_to_hwc(z.values()))
    }

    fn decode_vjp(&self, z: &LatentCode, grad_image: &Array3<f64>) -> Result<Array3<f64>> {
        z.ensure_shape(self.latent_shape())?;
        Ok(hwc_to_chw(grad_image))
    }
}

/// Stride-2 average-pool encoder with a bilinear-upsampling decoder.
#[derive(Debug, Clone)]
pub struct PoolAutoencoder {
    resolution: usize,
    down: SpatialMap,
    up: SpatialMap,
}

impl PoolAutoencoder {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 || resolution % 2 != 0 {
            return Err(Error::invalid(format!("pool autoencoder needs an even resolution, got {resolution}")));
        }
        let half = resolution / 2;
        let down = SpatialMap::from_taps((resolution, resolution), (half, half), |y, x, taps| {
            for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                taps.push(((2 * y + dy) * resolution + 2 * x + dx, 0.25));
            }
        });
        let up = SpatialMap::resize((half, half), (resolution, resolution));
        Ok(PoolAutoencoder { resolution, down, up })
    }
}

impl Autoencoder for PoolAutoencoder {
    fn name(&self) -> &str {
        "avgpool2"
    }

    fn latent_shape(&self) -> LatentShape {
        LatentShape::new(3, self.resolution / 2, self.resolution / 2)
    }

    fn native_resolution(&self) -> usize {
        self.resolution
    }

    fn encode(&self, image: &Image) -> Result<LatentCode> {
        let img = resize(image, self.resolution, self.resolution)?;
        LatentCode::new(hwc_to_chw(&self.down.apply(img.as_array())))
    }

    fn decode(&self, z: &LatentCode) -> Result<Image> {
        z.ensure_shape(self.latent_shape())?;
        Image::clamped(self.up.apply(&chw_to_hwc(z.values())))
    }

    fn decode_vjp(&self, z: &LatentCode, grad_image: &Array3<f64>) -> Result<Array3<f64>> {
        z.ensure_shape(self.latent_shape())?;
        Ok(hwc_to_chw(&self.up.apply_transpose(grad_image)))
    }
}

/// Binomial (1 4 6 4 1)/16 blur followed by stride-2 subsampling, edges
/// replicated.
fn pyramid_step(dims: (usize, usize)) -> SpatialMap {
    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let (h, w) = dims;
    let out = (h.div_ceil(2), w.div_ceil(2));
    SpatialMap::from_taps(dims, out, |y, x, taps| {
        for (a, ka) in K.iter().enumerate() {
            let yy = (2 * y + a).saturating_sub(2).min(h - 1);
            for (b, kb) in K.iter().enumerate() {
                let xx = (2 * x + b).saturating_sub(2).min(w - 1);
                taps.push((yy * w + xx, ka * kb));
            }
        }
    })
}

/// Multi-scale weighted squared distance between linear colour features of a
/// Gaussian pyramid.
///
/// At level `l` each pixel's RGB value is mapped through a seeded `k × 3`
/// matrix `M_l`; the squared feature differences are weighted by seeded
/// positive weights and averaged over the level's pixels. Levels are summed.
#[derive(Debug, Clone)]
pub struct PyramidDistance {
    seed: u64,
    mixing: Vec<Array2<f64>>,
    weights: Vec<Vec<f64>>,
}

impl PyramidDistance {
    pub fn new(seed: u64, levels: usize, features: usize) -> Self {
        let mut rng = rng::keyed_rng(&[seed, 0x22]);
        let mixing = (0..levels)
            .map(|_| Array2::from_shape_simple_fn((features, 3), || rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let weights = (0..levels)
            .map(|_| (0..features).map(|_| rng.random_range(0.5..1.5)).collect())
            .collect();
        PyramidDistance { seed, mixing, weights }
    }

    pub fn levels(&self) -> usize {
        self.mixing.len()
    }

    /// Pyramid levels of a difference image; stops early once a side drops
    /// below 4 pixels.
    fn pyramid(&self, diff: Array3<f64>) -> (Vec<Array3<f64>>, Vec<SpatialMap>) {
        let mut levels = vec![diff];
        let mut maps = Vec::new();
        while levels.len() < self.levels() {
            let last = levels.last().expect("non-empty");
            let (h, w, _) = last.dim();
            if h.min(w) < 4 {
                break;
            }
            let map = pyramid_step((h, w));
            levels.push(map.apply(last));
            maps.push(map);
        }
        (levels, maps)
    }

    // weighted metric M^T diag(w) M for one level
    fn metric(&self, level: usize) -> Array2<f64> {
        let m = &self.mixing[level];
        let w = Array2::from_diag(&ndarray::Array1::from(self.weights[level].clone()));
        m.t().dot(&w).dot(m)
    }

    fn check(a: &Image, b: &Image) -> Result<()> {
        if a.dims() != b.dims() {
            return Err(Error::invalid(format!(
                "perceptual distance needs equal sizes, got {:?} and {:?}",
                a.dims(),
                b.dims()
            )));
        }
        Ok(())
    }

    fn evaluate(&self, a: &Image, b: &Image, with_grad: bool) -> Result<(f64, Option<Array3<f64>>)> {
        Self::check(a, b)?;
        let diff = b.as_array() - a.as_array();
        let (levels, maps) = self.pyramid(diff);
        let mut total = 0.0;
        let mut level_grads = Vec::new();
        for (l, level) in levels.iter().enumerate() {
            let (h, w, _) = level.dim();
            let n = (h * w) as f64;
            let q = self.metric(l);
            let flat = level.view().into_shape_with_order((h * w, 3)).expect("flat level");
            // rows: q·d for each pixel difference d
            let qd = flat.dot(&q);
            total += (&qd * &flat).sum() / n;
            if with_grad {
                let g = qd.mapv(|v| 2.0 * v / n).into_shape_with_order((h, w, 3)).expect("grad shape");
                level_grads.push(g);
            }
        }
        if !with_grad {
            return Ok((total, None));
        }
        // back-propagate coarse to fine
        let mut grad = level_grads.pop().expect("at least one level");
        for (map, g) in maps.iter().rev().zip(level_grads.into_iter().rev()) {
            grad = map.apply_transpose(&grad) + g;
        }
        Ok((total, Some(grad)))
    }
}

impl PerceptualDistance for PyramidDistance {
    fn fingerprint(&self) -> String {
        format!("pyramid:{}:{}x{}", self.seed, self.levels(), self.mixing[0].nrows())
    }

    fn distance(&self, a: &Image, b: &Image) -> Result<f64> {
        Ok(self.evaluate(a, b, false)?.0)
    }

    fn distance_and_grad(&self, a: &Image, b: &Image) -> Result<(f64, Array3<f64>)> {
        let (d, g) = self.evaluate(a, b, true)?;
        Ok((d, g.expect("gradient requested")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AutoencoderKind {
    /// Exact reconstruction; optimization happens in pixel space.
    Identity,
    /// Stride-2 average pooling with bilinear upsampling.
    #[default]
    AvgPool,
}

/// Shape of the surrogate suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateConfig {
    pub seed: u64,
    /// Native resolution of the autoencoder.
    pub resolution: usize,
    pub autoencoder: AutoencoderKind,
    /// `(embedding dim, input resolution)` of each ensemble member.
    pub members: Vec<(usize, usize)>,
    /// Side of the pooled grid each linear embedder reads.
    pub pool_grid: usize,
    pub pyramid_levels: usize,
    pub pyramid_features: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            seed: 0,
            resolution: 32,
            autoencoder: AutoencoderKind::AvgPool,
            members: vec![(8, 24), (8, 24), (16, 30)],
            pool_grid: 6,
            pyramid_levels: 3,
            pyramid_features: 4,
        }
    }
}

/// The surrogate backends, before assembly into an ensemble.
#[derive(Clone)]
pub struct SurrogateSuite {
    pub text_encoders: Vec<Arc<dyn TextEncoder>>,
    pub image_embedders: Vec<Arc<dyn ImageEmbedder>>,
    pub autoencoder: Arc<dyn Autoencoder>,
    /// Stands in for the VGG-based distance used inside the loss.
    pub perceptual_opt: Arc<dyn PerceptualDistance>,
    /// Stands in for the AlexNet-based distance used for evaluation.
    pub perceptual_eval: Arc<dyn PerceptualDistance>,
}

impl SurrogateConfig {
    pub fn build(&self) -> Result<SurrogateSuite> {
        if self.members.is_empty() {
            return Err(Error::invalid("surrogate suite needs at least one member"));
        }
        let mut text_encoders: Vec<Arc<dyn TextEncoder>> = Vec::new();
        let mut image_embedders: Vec<Arc<dyn ImageEmbedder>> = Vec::new();
        for (i, &(dim, res)) in self.members.iter().enumerate() {
            let member_seed = rng::key(&[self.seed, 0x100 + i as u64]);
            let name = format!("linear{i}");
            text_encoders.push(Arc::new(HashTextEncoder::new(format!("{name}-text"), member_seed, dim)));
            image_embedders.push(Arc::new(LinearImageEmbedder::new(name, member_seed, dim, res, self.pool_grid)?));
        }
        let autoencoder: Arc<dyn Autoencoder> = match self.autoencoder {
            AutoencoderKind::Identity => Arc::new(IdentityAutoencoder::new(self.resolution)),
            AutoencoderKind::AvgPool => Arc::new(PoolAutoencoder::new(self.resolution)?),
        };
        let opt_seed = rng::key(&[self.seed, 0x16]);
        let eval_seed = rng::key(&[self.seed, 0xA1]);
        Ok(SurrogateSuite {
            text_encoders,
            image_embedders,
            autoencoder,
            perceptual_opt: Arc::new(PyramidDistance::new(opt_seed, self.pyramid_levels, self.pyramid_features)),
            perceptual_eval: Arc::new(PyramidDistance::new(eval_seed, self.pyramid_levels, self.pyramid_features)),
        })
    }
}

impl SurrogateSuite {
    pub fn ensemble(&self, augmentations: usize, spec: AugmentationSpec) -> Result<EnsembleEmbedder> {
        let members = self
            .image_embedders
            .iter()
            .zip(&self.text_encoders)
            .map(|(i, t)| EnsembleMember::new(i.clone(), t.clone()))
            .collect();
        EnsembleEmbedder::new(members, augmentations, spec)
    }

    pub fn backends(&self, augmentations: usize, spec: AugmentationSpec) -> Result<Backends> {
        Ok(Backends {
            ensemble: self.ensemble(augmentations, spec)?,
            autoencoder: self.autoencoder.clone(),
            perceptual_opt: self.perceptual_opt.clone(),
            perceptual_eval: self.perceptual_eval.clone(),
        })
    }
}

/// Default surrogate suite for `seed`.
pub fn surrogate_suite(seed: u64) -> Result<SurrogateSuite> {
    SurrogateConfig { seed, ..Default::default() }.build()
}
