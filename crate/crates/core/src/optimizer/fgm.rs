use ndarray::Array3;

use crate::error::{Error, Result};
use crate::latent::LatentCode;

/// ℓ2 norm with scaling against overflow.
fn stable_norm<'a>(values: impl Iterator<Item = &'a f64> + Clone) -> f64 {
    let max = values.clone().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    max * values.map(|v| (v / max).powi(2)).sum::<f64>().sqrt()
}

/// One normalized-gradient step: `z − μ · g / ‖g‖₂` with the global norm over
/// all latent entries. A zero gradient leaves `z` unchanged.
///
/// A non-finite gradient yields [`Error::NumericalFailure`]; the step index in
/// it is 0 and callers running a loop replace it with their own.
pub fn fgm_step(z: &LatentCode, grad: &Array3<f64>, step_size: f64) -> Result<LatentCode> {
    if !(step_size.is_finite() && step_size > 0.0) {
        return Err(Error::invalid(format!("step size must be positive, got {step_size}")));
    }
    if z.values().dim() != grad.dim() {
        return Err(Error::invalid(format!(
            "gradient shape {:?} does not match latent shape {:?}",
            grad.dim(),
            z.shape()
        )));
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalFailure {
            step: 0,
            detail: "non-finite gradient".into(),
        });
    }
    let norm = stable_norm(grad.iter());
    if norm == 0.0 {
        return Ok(z.clone());
    }
    let scale = step_size / norm;
    let mut out = z.values().clone();
    out.zip_mut_with(grad, |v, g| *v -= scale * g);
    LatentCode::new(out).map_err(|_| Error::NumericalFailure {
        step: 0,
        detail: "update produced non-finite latent".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arr(v: &[f64]) -> Array3<f64> {
        Array3::from_shape_vec((1, 1, v.len()), v.to_vec()).unwrap()
    }

    fn code(v: &[f64]) -> LatentCode {
        LatentCode::new(arr(v)).unwrap()
    }

    #[test]
    fn one_dimensional_step() {
        let z = fgm_step(&code(&[1.0]), &arr(&[2.0]), 0.05).unwrap();
        assert!((z.values()[[0, 0, 0]] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_noop() {
        let z = code(&[0.3, -0.2, 7.0]);
        assert_eq!(fgm_step(&z, &arr(&[0.0; 3]), 0.1).unwrap(), z);
    }

    #[test]
    fn non_finite_gradient_fails() {
        let err = fgm_step(&code(&[0.0, 0.0]), &arr(&[f64::NAN, 1.0]), 0.1).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { .. }));
        let err = fgm_step(&code(&[0.0, 0.0]), &arr(&[f64::INFINITY, 1.0]), 0.1).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure { .. }));
    }

    #[test]
    fn huge_gradients_do_not_overflow() {
        let z = fgm_step(&code(&[0.0, 0.0]), &arr(&[3e300, 4e300]), 1.0).unwrap();
        assert!((z.values()[[0, 0, 0]] + 0.6).abs() < 1e-15);
        assert!((z.values()[[0, 0, 1]] + 0.8).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(fgm_step(&code(&[0.0]), &arr(&[1.0]), 0.0).is_err());
        assert!(fgm_step(&code(&[0.0]), &arr(&[1.0, 2.0]), 0.1).is_err());
    }
}
