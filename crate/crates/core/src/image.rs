//! RGB images with pixel values in `[0, 1]`.

use std::path::Path;

use ndarray::{Array3, ArrayView3};

use crate::error::{Error, Result};
use crate::resample::SpatialMap;

/// Smallest side accepted for images entering the editing pipeline.
pub const MIN_PIPELINE_SIDE: usize = 8;

/// An RGB image stored as a `(height, width, 3)` array of values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pixels: Array3<f64>,
}

impl Image {
    /// Wrap a `(h, w, 3)` array, rejecting empty shapes and values outside
    /// `[0, 1]`.
    pub fn new(pixels: Array3<f64>) -> Result<Self> {
        let (h, w, c) = pixels.dim();
        if h == 0 || w == 0 {
            return Err(Error::invalid(format!("image dimensions must be positive, got {h}x{w}")));
        }
        if c != 3 {
            return Err(Error::invalid(format!("expected 3 channels, got {c}")));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Image { pixels })
    }

    /// Wrap a `(h, w, 3)` array after clamping every value into `[0, 1]`.
    /// Non-finite values are an error.
    pub fn clamped(mut pixels: Array3<f64>) -> Result<Self> {
        if pixels.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite pixel value"));
        }
        pixels.mapv_inplace(|v| v.clamp(0.0, 1.0));
        Image::new(pixels)
    }

    pub fn from_fn<F>(height: usize, width: usize, f: F) -> Result<Self>
    where
        F: FnMut((usize, usize, usize)) -> f64,
    {
        Image::new(Array3::from_shape_fn((height, width, 3), f))
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Image::new(Array3::from_elem((height, width, 3), value))
    }

    pub fn height(&self) -> usize {
        self.pixels.dim().0
    }

    pub fn width(&self) -> usize {
        self.pixels.dim().1
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height(), self.width())
    }

    pub fn pixels(&self) -> ArrayView3<'_, f64> {
        self.pixels.view()
    }

    pub fn as_array(&self) -> &Array3<f64> {
        &self.pixels
    }

    pub fn into_array(self) -> Array3<f64> {
        self.pixels
    }

    /// Checks the minimum side length required by the editing pipeline.
    pub fn ensure_pipeline_size(&self) -> Result<()> {
        let (h, w) = self.dims();
        if h < MIN_PIPELINE_SIDE || w < MIN_PIPELINE_SIDE {
            return Err(Error::invalid(format!(
                "image is {h}x{w}; both sides must be at least {MIN_PIPELINE_SIDE}"
            )));
        }
        Ok(())
    }

    /// Apply a spatial map and clamp the result back into `[0, 1]`.
    pub fn warp(&self, map: &SpatialMap) -> Image {
        let mut out = map.apply(&self.pixels);
        out.mapv_inplace(|v| v.clamp(0.0, 1.0));
        Image { pixels: out }
    }

    /// Decode a PNG (any bit depth/colour type) to RGB, values divided by 255.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode_png(&bytes)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)?.to_rgb8();
        let (w, h) = img.dimensions();
        let raw = img.into_raw();
        let pixels = Array3::from_shape_vec((h as usize, w as usize, 3), raw)
            .expect("rgb8 buffer shape")
            .mapv(|v| f64::from(v) / 255.0);
        Image::new(pixels)
    }

    /// Quantize to 8-bit RGB (round to nearest) and encode as PNG.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let (h, w) = self.dims();
        let raw: Vec<u8> = self
            .pixels
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        let buf = image::RgbImage::from_raw(w as u32, h as u32, raw).expect("buffer length");
        let mut out = std::io::Cursor::new(Vec::new());
        buf.write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// The image as it reads back after a PNG round trip.
    pub fn quantized(&self) -> Image {
        Image {
            pixels: self.pixels.mapv(|v| (v * 255.0).round() / 255.0),
        }
    }
}

/// Bilinear resize (half-pixel centres, edge replication, clamped to `[0, 1]`).
/// Resizing to the current size returns an exact copy.
pub fn resize(image: &Image, height: usize, width: usize) -> Result<Image> {
    if height == 0 || width == 0 {
        return Err(Error::invalid(format!("resize target must be positive, got {height}x{width}")));
    }
    if image.dims() == (height, width) {
        return Ok(image.clone());
    }
    Ok(image.warp(&SpatialMap::resize(image.dims(), (height, width))))
}
