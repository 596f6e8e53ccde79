use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::{resize, Image};
use crate::resample::SpatialMap;
use crate::rng;

/// Feature extractor for distribution metrics. Not differentiated.
pub trait FeatureExtractor: Send + Sync {
    fn dim(&self) -> usize;
    /// Images are resized to this square size before extraction.
    fn resolution(&self) -> usize;
    fn extract(&self, image: &Image) -> Result<Vec<f64>>;
}

/// Seeded random projection of an area-pooled thumbnail.
#[derive(Debug, Clone)]
pub struct ProjectionExtractor {
    resolution: usize,
    pool: SpatialMap,
    projection: Array2<f64>,
}

impl ProjectionExtractor {
    pub fn new(seed: u64, dim: usize, resolution: usize, grid: usize) -> Result<Self> {
        if dim == 0 || grid == 0 || grid > resolution {
            return Err(Error::invalid(format!(
                "projection extractor needs dim > 0 and grid in 1..={resolution}"
            )));
        }
        let inputs = grid * grid * 3;
        let scale = 1.0 / (inputs as f64).sqrt();
        let mut rng = rng::keyed_rng(&[seed, 0xFEA7]);
        let projection = Array2::from_shape_simple_fn((dim, inputs), || scale * rng.sample::<f64, _>(StandardNormal));
        Ok(ProjectionExtractor {
            resolution,
            pool: SpatialMap::area_pool((resolution, resolution), (grid, grid)),
            projection,
        })
    }
}

impl FeatureExtractor for ProjectionExtractor {
    fn dim(&self) -> usize {
        self.projection.nrows()
    }

    fn resolution(&self) -> usize {
        self.resolution
    }

    fn extract(&self, image: &Image) -> Result<Vec<f64>> {
        let img = resize(image, self.resolution, self.resolution)?;
        let pooled = self.pool.apply(img.as_array());
        let flat = pooled
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order(self.projection.ncols())
            .expect("flat");
        Ok(self.projection.dot(&flat).to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let e = ProjectionExtractor::new(3, 16, 64, 8).unwrap();
        let img = Image::from_fn(20, 30, |(y, x, c)| ((y + x + c) % 7) as f64 / 6.0).unwrap();
        let a = e.extract(&img).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a, e.extract(&img).unwrap());
        assert_ne!(a, ProjectionExtractor::new(4, 16, 64, 8).unwrap().extract(&img).unwrap());
    }
}
