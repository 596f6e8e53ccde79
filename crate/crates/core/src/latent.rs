use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a latent grid: channels × height × width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatentShape {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl LatentShape {
    pub fn new(channels: usize, height: usize, width: usize) -> Self {
        LatentShape { channels, height, width }
    }

    pub fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }
}

/// The optimization variable: a `(channels, height, width)` grid of finite
/// values. Spatial position `(y, x)` owns the channel vector `values[.., y, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    values: Array3<f64>,
}

impl LatentCode {
    pub fn new(values: Array3<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("latent code contains non-finite values"));
        }
        Ok(LatentCode { values })
    }

    pub fn zeros(shape: LatentShape) -> Self {
        LatentCode {
            values: Array3::zeros(shape.dim()),
        }
    }

    pub fn shape(&self) -> LatentShape {
        let (c, h, w) = self.values.dim();
        LatentShape::new(c, h, w)
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array3<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array3<f64> {
        self.values
    }

    /// Global ℓ2 norm over all entries.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn ensure_shape(&self, expected: LatentShape) -> Result<()> {
        if self.shape() != expected {
            return Err(Error::invalid(format!(
                "latent shape {:?} does not match expected {:?}",
                self.shape(),
                expected
            )));
        }
        Ok(())
    }
}
