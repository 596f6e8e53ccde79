//! Vectors in the joint text/image embedding space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An embedding produced by one encoder or by a concatenating ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    /// Names of the encoders whose outputs make up `values`, in order.
    pub provenance: Vec<String>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>, provenance: impl Into<String>) -> Self {
        EmbeddingVector {
            values,
            provenance: vec![provenance.into()],
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }
}

/// The fixed point in embedding space the optimizer pulls the edited image
/// towards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetPoint {
    pub values: Vec<f64>,
}

impl TargetPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("non-finite target point".into()));
        }
        Ok(TargetPoint { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Scale `v` to unit ℓ2 norm.
pub fn l2_normalize(v: &EmbeddingVector) -> Result<EmbeddingVector> {
    let values = normalize_slice(&v.values)?;
    Ok(EmbeddingVector {
        values,
        provenance: v.provenance.clone(),
    })
}

pub(crate) fn normalize_slice(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateInput(format!("cannot normalize vector with norm {n}")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Vector-Jacobian product of `v ↦ v / ‖v‖` at `v`: `(g − u (u·g)) / ‖v‖`
/// with `u = v / ‖v‖`.
pub(crate) fn normalize_vjp(v: &[f64], grad: &[f64]) -> Vec<f64> {
    let n = norm(v);
    let u_dot_g: f64 = v.iter().zip(grad).map(|(a, g)| a * g).sum::<f64>() / n;
    v.iter()
        .zip(grad)
        .map(|(a, g)| (g - a / n * u_dot_g) / n)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_four_five() {
        let v = l2_normalize(&EmbeddingVector::new(vec![3.0, 4.0], "t")).unwrap();
        assert_eq!(v.values, vec![0.6, 0.8]);
    }

    #[test]
    fn zero_vector_is_degenerate() {
        let err = l2_normalize(&EmbeddingVector::new(vec![0.0; 4], "t")).unwrap_err();
        assert!(matches!(err, Error::DegenerateInput(_)));
    }

    #[test]
    fn unit_vector_is_fixed() {
        let v = EmbeddingVector::new(vec![0.0, 1.0, 0.0], "t");
        assert_eq!(l2_normalize(&v).unwrap(), v);
    }

    #[test]
    fn normalize_vjp_matches_finite_differences() {
        let v = [0.3, -1.2, 0.7, 2.0];
        let g = [1.0, 0.5, -0.25, 0.125];
        let vjp = normalize_vjp(&v, &g);
        let f = |v: &[f64]| -> f64 {
            normalize_slice(v).unwrap().iter().zip(&g).map(|(a, b)| a * b).sum()
        };
        let h = 1e-6;
        for i in 0..v.len() {
            let (mut p, mut m) = (v, v);
            p[i] += h;
            m[i] -= h;
            let fd = (f(&p) - f(&m)) / (2.0 * h);
            assert!((fd - vjp[i]).abs() < 1e-8);
        }
    }
}
