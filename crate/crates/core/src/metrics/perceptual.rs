use crate::backends::PerceptualDistance;
use crate::error::Result;
use crate::image::{resize, Image};

/// Reported perceptual distances are multiplied by this factor.
pub const LPIPS_SCALE: f64 = 100.0;

/// Evaluation perceptual distance: both images resized to `resolution`
/// square, distance scaled by [`LPIPS_SCALE`].
pub fn eval_perceptual(a: &Image, b: &Image, pd_eval: &dyn PerceptualDistance, resolution: usize) -> Result<f64> {
    let a = resize(a, resolution, resolution)?;
    let b = resize(b, resolution, resolution)?;
    Ok(LPIPS_SCALE * pd_eval.distance(&a, &b)?)
}
