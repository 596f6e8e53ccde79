//! Random flip / rotation / crop augmentation, resized back to the input size.
//!
//! The three transforms are composed into a single inverse coordinate mapping
//! and sampled once with bilinear interpolation, so an augmentation is one
//! [`SpatialMap`] and its gradient is that map's transpose. Pixels rotated in
//! from outside the frame replicate the nearest edge pixel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::resample::SpatialMap;
use crate::rng;

/// Largest admissible rotation magnitude, in degrees.
pub const MAX_ROTATION_DEG: f64 = 10.0;
/// Smallest admissible fraction of the image area kept by the crop.
pub const MIN_CROP_AREA: f64 = 0.8;
pub const ASPECT_RANGE: (f64, f64) = (0.9, 1.1);

/// Parameters of the random augmentation. Validated on construction, so every
/// value of this type describes admissible draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct AugmentationSpec {
    flip_prob: f64,
    rotation_deg: (f64, f64),
    crop_area: (f64, f64),
    aspect: (f64, f64),
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    flip_prob: f64,
    rotation_deg: (f64, f64),
    crop_area: (f64, f64),
    aspect: (f64, f64),
    seed: u64,
}

impl TryFrom<RawSpec> for AugmentationSpec {
    type Error = Error;

    fn try_from(r: RawSpec) -> Result<Self> {
        AugmentationSpec::new(r.flip_prob, r.rotation_deg, r.crop_area, r.aspect, r.seed)
    }
}

impl From<AugmentationSpec> for RawSpec {
    fn from(s: AugmentationSpec) -> Self {
        RawSpec {
            flip_prob: s.flip_prob,
            rotation_deg: s.rotation_deg,
            crop_area: s.crop_area,
            aspect: s.aspect,
            seed: s.seed,
        }
    }
}

fn check_range(name: &str, (lo, hi): (f64, f64), min: f64, max: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && min <= lo && lo <= hi && hi <= max) {
        return Err(Error::invalid(format!(
            "{name} range [{lo}, {hi}] must be ordered and within [{min}, {max}]"
        )));
    }
    Ok(())
}

impl AugmentationSpec {
    pub fn new(
        flip_prob: f64,
        rotation_deg: (f64, f64),
        crop_area: (f64, f64),
        aspect: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip_prob) {
            return Err(Error::invalid(format!("flip probability {flip_prob} outside [0, 1]")));
        }
        check_range("rotation", rotation_deg, -MAX_ROTATION_DEG, MAX_ROTATION_DEG)?;
        check_range("crop area", crop_area, MIN_CROP_AREA, 1.0)?;
        check_range("aspect ratio", aspect, ASPECT_RANGE.0, ASPECT_RANGE.1)?;
        Ok(AugmentationSpec {
            flip_prob,
            rotation_deg,
            crop_area,
            aspect,
            seed,
        })
    }

    /// Flip with probability 0.5, rotation in ±10°, crop keeping 80–100% of
    /// the area at aspect ratio 0.9–1.1.
    pub fn standard(seed: u64) -> Self {
        AugmentationSpec {
            flip_prob: 0.5,
            rotation_deg: (-MAX_ROTATION_DEG, MAX_ROTATION_DEG),
            crop_area: (MIN_CROP_AREA, 1.0),
            aspect: ASPECT_RANGE,
            seed,
        }
    }

    /// Degenerate spec whose every draw is the identity transform.
    pub fn identity(seed: u64) -> Self {
        AugmentationSpec {
            flip_prob: 0.0,
            rotation_deg: (0.0, 0.0),
            crop_area: (1.0, 1.0),
            aspect: (1.0, 1.0),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn flip_prob(&self) -> f64 {
        self.flip_prob
    }

    pub fn rotation_deg(&self) -> (f64, f64) {
        self.rotation_deg
    }

    pub fn crop_area(&self) -> (f64, f64) {
        self.crop_area
    }

    pub fn aspect(&self) -> (f64, f64) {
        self.aspect
    }

    /// The random parameters of draw `draw_index`; a pure function of
    /// `(seed, draw_index)`.
    pub fn draw(&self, draw_index: u64) -> AugmentDraw {
        let mut rng = rng::keyed_rng(&[self.seed, draw_index]);
        let mut uniform = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        let flip_u = uniform((0.0, 1.0));
        let rotation_deg = uniform(self.rotation_deg);
        let area_fraction = uniform(self.crop_area);
        let aspect = uniform(self.aspect);
        let offset_y = uniform((0.0, 1.0));
        let offset_x = uniform((0.0, 1.0));
        AugmentDraw {
            flip: flip_u < self.flip_prob,
            rotation_deg,
            area_fraction,
            aspect,
            offset: (offset_y, offset_x),
        }
    }
}

/// Realized parameters of one augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraw {
    pub flip: bool,
    pub rotation_deg: f64,
    /// Fraction of the image area kept by the crop.
    pub area_fraction: f64,
    /// Crop width/height ratio relative to the image's own ratio.
    pub aspect: f64,
    /// Relative position of the crop box in the free space, each in `[0, 1)`.
    pub offset: (f64, f64),
}

impl AugmentDraw {
    /// Crop box `(top, left, height, width)` in pixel-edge coordinates of an
    /// `h × w` image. The box area is exactly `area_fraction · h · w`.
    pub fn crop_box(&self, h: usize, w: usize) -> (f64, f64, f64, f64) {
        let (hf, wf) = (h as f64, w as f64);
        let a = self.area_fraction;
        let (mut ch, mut cw) = (hf * (a / self.aspect).sqrt(), wf * (a * self.aspect).sqrt());
        if cw > wf {
            cw = wf;
            ch = hf * a;
        } else if ch > hf {
            ch = hf;
            cw = wf * a;
        }
        let top = (hf - ch) * self.offset.0;
        let left = (wf - cw) * self.offset.1;
        (top, left, ch, cw)
    }

    pub fn is_identity(&self) -> bool {
        !self.flip && self.rotation_deg == 0.0 && self.area_fraction == 1.0
    }
}

/// The spatial map realizing draw `draw_index` of `spec` on an `h × w` image.
pub fn augmentation_map(dims: (usize, usize), spec: &AugmentationSpec, draw_index: u64) -> SpatialMap {
    let draw = spec.draw(draw_index);
    let (h, w) = dims;
    let (top, left, ch, cw) = draw.crop_box(h, w);
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let theta = draw.rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let (sy, sx) = (ch / h as f64, cw / w as f64);
    let flip = draw.flip;
    SpatialMap::warp(dims, dims, move |y, x| {
        // crop + resize back: output pixel centre -> point in the rotated frame
        let py = top + (y as f64 + 0.5) * sy - 0.5;
        let px = left + (x as f64 + 0.5) * sx - 0.5;
        // inverse rotation about the image centre
        let (dy, dx) = (py - cy, px - cx);
        let qy = cy + dy * cos - dx * sin;
        let qx = cx + dy * sin + dx * cos;
        let qx = if flip { (w as f64 - 1.0) - qx } else { qx };
        (qy, qx)
    })
}

/// Apply draw `draw_index` of `spec` to `image`. The output has the input's
/// size.
pub fn augment(image: &Image, spec: &AugmentationSpec, draw_index: u64) -> Image {
    if spec.draw(draw_index).is_identity() {
        return image.clone();
    }
    image.warp(&augmentation_map(image.dims(), spec, draw_index))
}
