//! Loss terms and their gradients with respect to the latent code.

use ndarray::{Array3, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::backends::{Autoencoder, Backends, EnsembleEmbedder, PerceptualDistance};
use crate::embedding::TargetPoint;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::latent::LatentCode;
use crate::params::{HyperParams, LatentNorm};

/// Loss components at one optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub step: usize,
    pub emb: f64,
    pub perc: f64,
    pub latent: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(step: usize, emb: f64, perc: f64, latent: f64, hp: &HyperParams) -> Self {
        LossBreakdown {
            step,
            emb,
            perc,
            latent,
            total: emb + hp.lambda_perceptual * perc + hp.lambda_latent * latent,
        }
    }
}

/// Everything the loss needs besides the current latent code.
#[derive(Clone, Copy)]
pub struct LossContext<'a> {
    pub target: &'a TargetPoint,
    /// The input image at the autoencoder's native resolution.
    pub reference: &'a Image,
    /// The latent the optimization started from.
    pub initial: &'a LatentCode,
    pub backends: &'a Backends,
    /// Ensemble with the run's augmentation count and seed.
    pub ensemble: &'a EnsembleEmbedder,
    pub hp: &'a HyperParams,
}

fn squared_residual(embedding: &[f64], target: &TargetPoint) -> Result<(f64, Vec<f64>)> {
    if embedding.len() != target.dim() {
        return Err(Error::invalid(format!(
            "embedding dim {} does not match target dim {}",
            embedding.len(),
            target.dim()
        )));
    }
    let residual: Vec<f64> = embedding.iter().zip(&target.values).map(|(e, p)| e - p).collect();
    Ok((residual.iter().map(|r| r * r).sum(), residual))
}

/// `‖C_i(decoded) − P‖²` for an already decoded image, with its gradient with
/// respect to the image pixels.
fn embedding_term(
    decoded: &Image,
    target: &TargetPoint,
    ensemble: &EnsembleEmbedder,
    step: u64,
    with_grad: bool,
) -> Result<(f64, Option<Array3<f64>>)> {
    let emb = ensemble.embed_image(decoded, step)?;
    let (value, residual) = squared_residual(&emb.vector.values, target)?;
    if !with_grad {
        return Ok((value, None));
    }
    let upstream: Vec<f64> = residual.iter().map(|r| 2.0 * r).collect();
    Ok((value, Some(emb.backward(ensemble, &upstream)?)))
}

/// Squared distance between the ensemble embedding of the decoded latent and
/// the target point. Augmentations are drawn fresh for `step`.
pub fn embedding_loss(
    z: &LatentCode,
    target: &TargetPoint,
    decoder: &dyn Autoencoder,
    ensemble: &EnsembleEmbedder,
    step: u64,
) -> Result<f64> {
    let decoded = decoder.decode(z)?;
    Ok(embedding_term(&decoded, target, ensemble, step, false)?.0)
}

pub fn embedding_loss_and_grad(
    z: &LatentCode,
    target: &TargetPoint,
    decoder: &dyn Autoencoder,
    ensemble: &EnsembleEmbedder,
    step: u64,
) -> Result<(f64, LatentCode)> {
    let decoded = decoder.decode(z)?;
    let (value, g) = embedding_term(&decoded, target, ensemble, step, true)?;
    let g = decoder.decode_vjp(z, &g.expect("gradient requested"))?;
    Ok((value, LatentCode::new(g)?))
}

/// Perceptual distance between the decoded latent and the input image.
pub fn perceptual_loss(
    z: &LatentCode,
    reference: &Image,
    decoder: &dyn Autoencoder,
    distance: &dyn PerceptualDistance,
) -> Result<f64> {
    distance.distance(&decoder.decode(z)?, reference)
}

pub fn perceptual_loss_and_grad(
    z: &LatentCode,
    reference: &Image,
    decoder: &dyn Autoencoder,
    distance: &dyn PerceptualDistance,
) -> Result<(f64, LatentCode)> {
    let decoded = decoder.decode(z)?;
    let (value, g) = distance.distance_and_grad(reference, &decoded)?;
    Ok((value, LatentCode::new(decoder.decode_vjp(z, &g)?)?))
}

fn check_same_shape(z: &LatentCode, z0: &LatentCode) -> Result<()> {
    if z.shape() != z0.shape() {
        return Err(Error::invalid(format!(
            "latent shapes differ: {:?} vs {:?}",
            z.shape(),
            z0.shape()
        )));
    }
    Ok(())
}

/// Distance between `z` and `z0` under `norm`. For [`LatentNorm::L21`] each
/// spatial position contributes the Euclidean norm of its channel vector.
pub fn latent_loss(z: &LatentCode, z0: &LatentCode, norm: LatentNorm) -> Result<f64> {
    Ok(latent_loss_impl(z, z0, norm, false)?.0)
}

/// Latent distance with its gradient in `z`. Where the norm is not
/// differentiable (zero difference) the zero subgradient is used.
pub fn latent_loss_and_grad(z: &LatentCode, z0: &LatentCode, norm: LatentNorm) -> Result<(f64, LatentCode)> {
    let (v, g) = latent_loss_impl(z, z0, norm, true)?;
    Ok((v, LatentCode::new(g.expect("gradient requested"))?))
}

fn latent_loss_impl(
    z: &LatentCode,
    z0: &LatentCode,
    norm: LatentNorm,
    with_grad: bool,
) -> Result<(f64, Option<Array3<f64>>)> {
    check_same_shape(z, z0)?;
    let delta = z.values() - z0.values();
    match norm {
        LatentNorm::L1 => {
            let value = delta.iter().map(|d| d.abs()).sum();
            let grad = with_grad.then(|| delta.mapv(|d| if d == 0.0 { 0.0 } else { d.signum() }));
            Ok((value, grad))
        }
        LatentNorm::L2 => {
            let n = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            let grad = with_grad.then(|| if n == 0.0 { delta.mapv(|_| 0.0) } else { delta.mapv(|d| d / n) });
            Ok((n, grad))
        }
        LatentNorm::L21 => {
            // channel axis is 0; reduce over it for per-position norms
            let norms = delta.map_axis(Axis(0), |col| col.iter().map(|d| d * d).sum::<f64>().sqrt());
            let value = norms.sum();
            let grad = with_grad.then(|| {
                let mut g = delta.clone();
                for mut channel in g.axis_iter_mut(Axis(0)) {
                    Zip::from(&mut channel).and(&norms).for_each(|v, &n| {
                        *v = if n == 0.0 { 0.0 } else { *v / n };
                    });
                }
                g
            });
            Ok((value, grad))
        }
    }
}

/// All three terms at `z`; `total = emb + λ_p·perc + λ_z·latent`.
pub fn total_loss(z: &LatentCode, ctx: &LossContext<'_>, step: usize) -> Result<LossBreakdown> {
    let decoder = ctx.backends.autoencoder.as_ref();
    let decoded = decoder.decode(z)?;
    let (emb, _) = embedding_term(&decoded, ctx.target, ctx.ensemble, step as u64, false)?;
    let perc = ctx.backends.perceptual_opt.distance(&decoded, ctx.reference)?;
    let latent = latent_loss(z, ctx.initial, ctx.hp.latent_norm)?;
    Ok(LossBreakdown::new(step, emb, perc, latent, ctx.hp))
}

/// [`total_loss`] and its gradient with respect to `z`. The decoder is run
/// once and its vector-Jacobian product applied to the summed image gradient.
pub fn total_loss_and_grad(z: &LatentCode, ctx: &LossContext<'_>, step: usize) -> Result<(LossBreakdown, LatentCode)> {
    let hp = ctx.hp;
    let decoder = ctx.backends.autoencoder.as_ref();
    let decoded = decoder.decode(z)?;
    let (emb, g_emb) = embedding_term(&decoded, ctx.target, ctx.ensemble, step as u64, true)?;
    let mut g_image = g_emb.expect("gradient requested");
    let (perc, g_perc) = ctx.backends.perceptual_opt.distance_and_grad(ctx.reference, &decoded)?;
    g_image.scaled_add(hp.lambda_perceptual, &g_perc);
    let mut grad = decoder.decode_vjp(z, &g_image)?;
    let (latent, g_latent) = latent_loss_impl(z, ctx.initial, hp.latent_norm, true)?;
    grad.scaled_add(hp.lambda_latent, &g_latent.expect("gradient requested"));
    let breakdown = LossBreakdown::new(step, emb, perc, latent, hp);
    let grad = LatentCode::new(grad).map_err(|_| Error::NumericalFailure {
        step,
        detail: "non-finite loss gradient".into(),
    })?;
    Ok((breakdown, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latent::LatentShape;

    fn code(shape: (usize, usize, usize), f: impl FnMut((usize, usize, usize)) -> f64) -> LatentCode {
        LatentCode::new(Array3::from_shape_fn(shape, f)).unwrap()
    }

    #[test]
    fn equal_codes_have_zero_distance() {
        let z = code((3, 4, 5), |(c, y, x)| (c + 2 * y + 3 * x) as f64);
        for norm in [LatentNorm::L1, LatentNorm::L2, LatentNorm::L21] {
            assert_eq!(latent_loss(&z, &z, norm).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_position_three_four() {
        let z0 = LatentCode::zeros(LatentShape::new(2, 3, 3));
        let mut z = z0.clone();
        z.values_mut()[[0, 1, 2]] = 3.0;
        z.values_mut()[[1, 1, 2]] = 4.0;
        assert_eq!(latent_loss(&z, &z0, LatentNorm::L21).unwrap(), 5.0);
        assert_eq!(latent_loss(&z, &z0, LatentNorm::L2).unwrap(), 5.0);
        assert_eq!(latent_loss(&z, &z0, LatentNorm::L1).unwrap(), 7.0);
    }

    #[test]
    fn shape_mismatch_is_invalid() {
        let a = LatentCode::zeros(LatentShape::new(2, 3, 3));
        let b = LatentCode::zeros(LatentShape::new(3, 3, 2));
        assert!(matches!(latent_loss(&a, &b, LatentNorm::L21), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn breakdown_arithmetic() {
        let bd = LossBreakdown::new(0, 1.0, 2.0, 4.0, &HyperParams::default());
        assert!((bd.total - 1.5).abs() < 1e-15);
        let hp = HyperParams { lambda_perceptual: 0.0, lambda_latent: 0.0, ..Default::default() };
        assert_eq!(LossBreakdown::new(0, 0.7, 2.0, 4.0, &hp).total, 0.7);
    }

    #[test]
    fn one_dimensional_residual() {
        let p = TargetPoint::new(vec![0.5]).unwrap();
        let (v, r) = squared_residual(&[0.3], &p).unwrap();
        assert!((v - 0.04).abs() < 1e-15);
        assert!((r[0] + 0.2).abs() < 1e-15);
    }
}
