//! Encoder interfaces, the augmentation pipeline, the concatenating ensemble
//! embedder and deterministic surrogate backends.
//!
//! Differentiable components expose their gradient as an explicit
//! vector-Jacobian product rather than through an autodiff graph: the caller
//! passes the upstream gradient and receives the gradient with respect to the
//! component's input. Adapters for real networks implement the same methods
//! by delegating to their framework's backward pass.

mod augment;
mod ensemble;
mod registry;
mod surrogate;

use std::sync::Arc;

use ndarray::Array3;

use crate::error::Result;
use crate::image::Image;
use crate::latent::{LatentCode, LatentShape};

pub use augment::{
    augment, augmentation_map, AugmentDraw, AugmentationSpec, ASPECT_RANGE, MAX_ROTATION_DEG, MIN_CROP_AREA,
};
pub use ensemble::{
    ensemble_embed_image, ensemble_embed_text, EnsembleEmbedder, EnsembleMember, ImageEmbedding,
};
pub use registry::{BackendConstructor, BackendRegistry, SURROGATE_ID};
pub use surrogate::{
    surrogate_suite, AutoencoderKind, HashTextEncoder, IdentityAutoencoder, LinearImageEmbedder,
    PoolAutoencoder, PyramidDistance, SurrogateConfig, SurrogateSuite,
};

/// Maps text to a fixed embedding. Texts are constants of a run, so no
/// gradient is exposed.
pub trait TextEncoder: Send + Sync {
    fn name(&self) -> &str;
    fn embed_dim(&self) -> usize;
    fn encode_text(&self, text: &str) -> Result<Vec<f64>>;
}

/// Differentiable image encoder, one member of the ensemble.
pub trait ImageEmbedder: Send + Sync {
    fn name(&self) -> &str;
    fn embed_dim(&self) -> usize;
    /// Side length of the square input this encoder expects.
    fn input_resolution(&self) -> usize;
    /// `image` is already at `input_resolution`.
    fn encode_image(&self, image: &Image) -> Result<Vec<f64>>;
    /// Gradient with respect to the pixels of `image` of `⟨grad, encode_image(image)⟩`.
    fn encode_image_vjp(&self, image: &Image, grad: &[f64]) -> Result<Array3<f64>>;
}

/// Image autoencoder whose latent space is optimized.
pub trait Autoencoder: Send + Sync {
    fn name(&self) -> &str;
    fn latent_shape(&self) -> LatentShape;
    /// Side length of the square images the decoder produces.
    fn native_resolution(&self) -> usize;
    /// Encodes `image` after resizing it to the native resolution.
    fn encode(&self, image: &Image) -> Result<LatentCode>;
    /// Decodes to an image clamped into `[0, 1]`.
    fn decode(&self, z: &LatentCode) -> Result<Image>;
    /// Gradient with respect to `z` of `⟨grad_image, decode(z)⟩`. The output
    /// clamp is treated as the identity.
    fn decode_vjp(&self, z: &LatentCode, grad_image: &Array3<f64>) -> Result<Array3<f64>>;
}

/// Perceptual distance between two images of equal size.
///
/// Implementations must satisfy `d(x, x) = 0`, `d(x, y) = d(y, x)` and
/// `d ≥ 0`.
pub trait PerceptualDistance: Send + Sync {
    /// Identifies the feature stack; two instances with equal fingerprints
    /// compute the same function.
    fn fingerprint(&self) -> String;
    fn distance(&self, a: &Image, b: &Image) -> Result<f64>;
    /// Distance together with its gradient with respect to the second
    /// argument.
    fn distance_and_grad(&self, a: &Image, b: &Image) -> Result<(f64, Array3<f64>)>;
}

/// Everything the optimizer needs.
#[derive(Clone)]
pub struct Backends {
    pub ensemble: EnsembleEmbedder,
    pub autoencoder: Arc<dyn Autoencoder>,
    /// Instance used inside the optimization loss.
    pub perceptual_opt: Arc<dyn PerceptualDistance>,
    /// Instance used only for evaluation.
    pub perceptual_eval: Arc<dyn PerceptualDistance>,
}

impl Backends {
    /// Fails when the optimization and evaluation perceptual distances share a
    /// feature stack.
    pub fn ensure_distinct_perceptual(&self) -> Result<()> {
        if self.perceptual_opt.fingerprint() == self.perceptual_eval.fingerprint() {
            return Err(crate::Error::invalid(format!(
                "optimization and evaluation perceptual distances share the feature stack `{}`",
                self.perceptual_opt.fingerprint()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Debug for Backends {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Backends")
            .field("ensemble", &self.ensemble)
            .field("autoencoder", &self.autoencoder.name())
            .field("perceptual_opt", &self.perceptual_opt.fingerprint())
            .field("perceptual_eval", &self.perceptual_eval.fingerprint())
            .finish()
    }
}
