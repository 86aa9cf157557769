//! Raster types and the five-stage preprocessing pipeline.
//!
//! All stages are pure and deterministic: intermediate arithmetic runs in
//! f64 and results are quantized back to 8-bit intensities only at stage
//! boundaries. Border handling is edge replication throughout.

mod blur;
mod canny;
mod nlm;
pub mod pnm;
mod threshold;

pub use blur::gaussian_blur;
pub use canny::canny;
pub use nlm::{nlm_denoise, nlm_denoise_with_noise};
pub use threshold::adaptive_threshold;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 2-D 8-bit grayscale raster, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input("image dimensions must be positive".into()));
        }
        if data.len() != width * height {
            return Err(Error::Input(format!(
                "pixel buffer has {} bytes, expected {}x{} = {}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(GrayImage { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage { width, height, data: vec![value; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        GrayImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    /// Read with edge replication: out-of-range coordinates clamp to the
    /// nearest border pixel.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    /// Crop the half-open rectangle [x0, x1) x [y0, y1).
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<GrayImage> {
        if x0 >= x1 || y0 >= y1 || x1 > self.width || y1 > self.height {
            return Err(Error::Input(format!(
                "crop [{x0},{x1})x[{y0},{y1}) outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for y in y0..y1 {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x1]);
        }
        Ok(GrayImage { width: x1 - x0, height: y1 - y0, data })
    }
}

/// 2-D 8-bit RGB raster, row-major interleaved triples.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Input("image dimensions must be positive".into()));
        }
        if data.len() != 3 * width * height {
            return Err(Error::Input(format!(
                "pixel buffer has {} bytes, expected 3x{}x{} = {}",
                data.len(),
                width,
                height,
                3 * width * height
            )));
        }
        Ok(RgbImage { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (u8, u8, u8) {
        let i = 3 * (y * self.width + x);
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }
}

/// Raster whose values are restricted to {0, 255}.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Input("binary buffer length mismatch".into()));
        }
        if let Some(v) = data.iter().find(|&&v| v != 0 && v != 255) {
            return Err(Error::Input(format!("binary image contains value {v}, expected 0 or 255")));
        }
        Ok(BinaryImage { width, height, data })
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, data: Vec<u8>) -> Self {
        debug_assert!(data.iter().all(|&v| v == 0 || v == 255));
        BinaryImage { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage { width: self.width, height: self.height, data: self.data.clone() }
    }
}

/// Which preprocessing output feeds the classifier.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CnnInput {
    Denoised,
    Thresholded,
    Edges,
}

/// Parameters for the full preprocessing chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub blur_kernel: usize,
    pub blur_sigma: f64,
    pub nlm_h: f64,
    /// Noise offset sigma_n in the patch-distance weighting. Kept at 0 by
    /// default (pure patch-distance weighting).
    pub nlm_sigma: f64,
    pub nlm_template: usize,
    pub nlm_search: usize,
    pub at_block: usize,
    pub at_c: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub cnn_input: CnnInput,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            blur_kernel: 5,
            blur_sigma: 1.0,
            nlm_h: 10.0,
            nlm_sigma: 0.0,
            nlm_template: 7,
            nlm_search: 21,
            at_block: 11,
            at_c: 2.0,
            canny_low: 50.0,
            canny_high: 150.0,
            cnn_input: CnnInput::Denoised,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blur_kernel < 3 || self.blur_kernel % 2 == 0 {
            return Err(Error::Parameter(format!(
                "blur_kernel must be an odd integer >= 3, got {}",
                self.blur_kernel
            )));
        }
        if self.blur_sigma <= 0.0 {
            return Err(Error::Parameter(format!("blur_sigma must be positive, got {}", self.blur_sigma)));
        }
        if self.nlm_h <= 0.0 {
            return Err(Error::Parameter(format!("nlm_h must be positive, got {}", self.nlm_h)));
        }
        if self.nlm_template % 2 == 0 || self.nlm_search % 2 == 0 {
            return Err(Error::Parameter("nlm_template and nlm_search must be odd".into()));
        }
        if self.nlm_template >= self.nlm_search {
            return Err(Error::Parameter(format!(
                "nlm_template ({}) must be smaller than nlm_search ({})",
                self.nlm_template, self.nlm_search
            )));
        }
        if self.at_block < 3 || self.at_block % 2 == 0 {
            return Err(Error::Parameter(format!(
                "at_block must be an odd integer >= 3, got {}",
                self.at_block
            )));
        }
        if !(0.0..=255.0).contains(&self.canny_low)
            || !(0.0..=255.0).contains(&self.canny_high)
            || self.canny_low >= self.canny_high
        {
            return Err(Error::Parameter(format!(
                "canny thresholds must satisfy 0 <= low < high <= 255, got {} / {}",
                self.canny_low, self.canny_high
            )));
        }
        Ok(())
    }
}

/// ITU-R BT.601 luma conversion, rounded to the nearest integer.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let mut data = Vec::with_capacity(img.width * img.height);
    for px in img.data.chunks_exact(3) {
        let y = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
        data.push(y.round().clamp(0.0, 255.0) as u8);
    }
    GrayImage { width: img.width, height: img.height, data }
}

/// Run the pipeline on a grayscale input: blur, denoise, then hand back the
/// raster selected by `cfg.cnn_input` (threshold and edge maps are computed
/// from the denoised image).
pub fn preprocess(img: &GrayImage, cfg: &PipelineConfig) -> Result<GrayImage> {
    cfg.validate()?;
    let blurred = gaussian_blur(img, cfg.blur_kernel, cfg.blur_sigma)?;
    let denoised =
        nlm_denoise_with_noise(&blurred, cfg.nlm_h, cfg.nlm_sigma, cfg.nlm_template, cfg.nlm_search)?;
    match cfg.cnn_input {
        CnnInput::Denoised => Ok(denoised),
        CnnInput::Thresholded => {
            Ok(adaptive_threshold(&denoised, cfg.at_block, cfg.at_c)?.to_gray())
        }
        CnnInput::Edges => Ok(canny(&denoised, cfg.canny_low, cfg.canny_high)?.to_gray()),
    }
}

/// Same as [`preprocess`] but starting from an RGB raster.
pub fn preprocess_rgb(img: &RgbImage, cfg: &PipelineConfig) -> Result<GrayImage> {
    preprocess(&to_grayscale(img), cfg)
}

/// Internal f64 raster used between pipeline phases that must not quantize.
#[derive(Clone, Debug)]
pub(crate) struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl FloatImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        FloatImage { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_gray(img: &GrayImage) -> Self {
        FloatImage {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v as f64).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    pub fn round_to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_equal_channels_map_to_themselves() {
        let img = RgbImage::new(1, 1, vec![128, 128, 128]).unwrap();
        assert_eq!(to_grayscale(&img).get(0, 0), 128);
        let black = RgbImage::new(1, 1, vec![0, 0, 0]).unwrap();
        assert_eq!(to_grayscale(&black).get(0, 0), 0);
    }

    #[test]
    fn grayscale_pure_red() {
        // round(0.299 * 255) = 76
        let img = RgbImage::new(1, 1, vec![255, 0, 0]).unwrap();
        assert_eq!(to_grayscale(&img).get(0, 0), 76);
    }

    #[test]
    fn grayscale_preserves_dimensions() {
        let img = RgbImage::new(5, 3, vec![10; 45]).unwrap();
        let g = to_grayscale(&img);
        assert_eq!((g.width(), g.height()), (5, 3));
    }

    #[test]
    fn gray_image_validates_buffer_length() {
        assert!(GrayImage::new(4, 4, vec![0; 15]).is_err());
        assert!(GrayImage::new(0, 4, vec![]).is_err());
        assert!(GrayImage::new(4, 4, vec![0; 16]).is_ok());
    }

    #[test]
    fn binary_image_rejects_intermediate_values() {
        assert!(BinaryImage::new(2, 1, vec![0, 254]).is_err());
        assert!(BinaryImage::new(2, 1, vec![0, 255]).is_ok());
    }

    #[test]
    fn preprocess_constant_image_denoised_is_identity() {
        let img = GrayImage::filled(16, 16, 77);
        let cfg = PipelineConfig { nlm_search: 7, nlm_template: 3, ..PipelineConfig::default() };
        let out = preprocess(&img, &cfg).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn preprocess_constant_image_edges_is_zero() {
        let img = GrayImage::filled(16, 16, 77);
        let cfg = PipelineConfig {
            nlm_search: 7,
            nlm_template: 3,
            cnn_input: CnnInput::Edges,
            ..PipelineConfig::default()
        };
        let out = preprocess(&img, &cfg).unwrap();
        assert!(out.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn preprocess_constant_image_thresholded_is_white() {
        // c = 2 > 0, so every pixel clears mean - c.
        let img = GrayImage::filled(16, 16, 77);
        let cfg = PipelineConfig {
            nlm_search: 7,
            nlm_template: 3,
            cnn_input: CnnInput::Thresholded,
            ..PipelineConfig::default()
        };
        let out = preprocess(&img, &cfg).unwrap();
        assert!(out.data().iter().all(|&v| v == 255));
    }

    #[test]
    fn pipeline_config_validation_catches_bad_values() {
        let ok = PipelineConfig::default();
        assert!(ok.validate().is_ok());
        assert!(PipelineConfig { blur_kernel: 4, ..ok.clone() }.validate().is_err());
        assert!(PipelineConfig { blur_sigma: 0.0, ..ok.clone() }.validate().is_err());
        assert!(PipelineConfig { nlm_template: 9, nlm_search: 7, ..ok.clone() }.validate().is_err());
        assert!(PipelineConfig { at_block: 1, ..ok.clone() }.validate().is_err());
        assert!(PipelineConfig { canny_low: 150.0, canny_high: 50.0, ..ok }.validate().is_err());
    }
}
