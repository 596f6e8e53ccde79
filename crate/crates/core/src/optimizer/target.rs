use crate::backends::EnsembleEmbedder;
use crate::embedding::TargetPoint;
use crate::error::{Error, Result};
use crate::image::Image;

/// Augmentation draw base used for the image term of the target point; never
/// collides with an optimizer step index.
pub const TARGET_DRAW_BASE: u64 = u64::MAX;

/// `P = C_t(target) + λ_image · C_i(image) − λ_source · C_t(source)`, all three
/// embeddings taken with the ensemble (the image one with augmentation
/// averaging).
pub fn compute_target(
    image: &Image,
    source_text: &str,
    target_text: &str,
    ensemble: &EnsembleEmbedder,
    lambda_image: f64,
    lambda_source: f64,
) -> Result<TargetPoint> {
    if source_text.trim().is_empty() || target_text.trim().is_empty() {
        return Err(Error::invalid("source and target text must be non-empty"));
    }
    let t = ensemble.embed_text(target_text)?;
    let s = ensemble.embed_text(source_text)?;
    let i = ensemble.embed_image(image, TARGET_DRAW_BASE)?.vector;
    let values = t
        .values
        .iter()
        .zip(&i.values)
        .zip(&s.values)
        .map(|((t, i), s)| t + lambda_image * i - lambda_source * s)
        .collect();
    TargetPoint::new(values)
}
