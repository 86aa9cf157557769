//! Gaussian smoothing.

use crate::error::{Error, Result};

use super::{FloatImage, GrayImage};

/// Normalized 1-D Gaussian kernel of odd length `kernel`.
pub(crate) fn gaussian_kernel_1d(kernel: usize, sigma: f64) -> Vec<f64> {
    let r = (kernel / 2) as isize;
    let mut w: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Separable Gaussian convolution over an f64 raster with edge replication.
/// No quantization; used both by the public blur stage and internally by the
/// edge detector.
pub(crate) fn blur_float(img: &FloatImage, kernel: usize, sigma: f64) -> FloatImage {
    let w = gaussian_kernel_1d(kernel, sigma);
    let r = (kernel / 2) as isize;

    // Horizontal pass.
    let mut hpass = FloatImage::zeros(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let mut acc = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                acc += wk * img.get_clamped(x as isize + k as isize - r, y as isize);
            }
            hpass.set(x, y, acc);
        }
    }

    // Vertical pass.
    let mut out = FloatImage::zeros(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let mut acc = 0.0;
            for (k, &wk) in w.iter().enumerate() {
                acc += wk * hpass.get_clamped(x as isize, y as isize + k as isize - r);
            }
            out.set(x, y, acc);
        }
    }
    out
}

/// Convolve with a normalized 2-D Gaussian (applied separably) and round
/// back to 8-bit intensities. Borders are edge-replicated.
pub fn gaussian_blur(img: &GrayImage, kernel: usize, sigma: f64) -> Result<GrayImage> {
    if kernel % 2 == 0 || kernel < 3 {
        return Err(Error::Parameter(format!("blur kernel must be odd and >= 3, got {kernel}")));
    }
    if sigma <= 0.0 {
        return Err(Error::Parameter(format!("blur sigma must be positive, got {sigma}")));
    }
    Ok(blur_float(&FloatImage::from_gray(img), kernel, sigma).round_to_gray())
}
