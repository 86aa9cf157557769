//! Non-local means denoising.
//!
//! Every pixel is replaced by a weighted mean of the pixels in its search
//! window, where the weight of a candidate decays with the mean squared
//! difference between the template patch around the candidate and the patch
//! around the pixel being restored.

use crate::error::{Error, Result};

use super::{FloatImage, GrayImage};

/// Mean squared difference between the template patches centered at p and q.
#[inline]
fn patch_distance_sq(
    img: &FloatImage,
    px: isize,
    py: isize,
    qx: isize,
    qy: isize,
    tr: isize,
) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for dy in -tr..=tr {
        for dx in -tr..=tr {
            let a = img.get_clamped(px + dx, py + dy);
            let b = img.get_clamped(qx + dx, qy + dy);
            let d = a - b;
            acc += d * d;
            count += 1;
        }
    }
    acc / count as f64
}

/// Non-local means with an explicit noise offset `sigma_n`:
/// weight = exp(-max(d^2 - 2*sigma_n^2, 0) / h^2).
pub fn nlm_denoise_with_noise(
    img: &GrayImage,
    h: f64,
    sigma_n: f64,
    template: usize,
    search: usize,
) -> Result<GrayImage> {
    if h <= 0.0 {
        return Err(Error::Parameter(format!("nlm h must be positive, got {h}")));
    }
    if template % 2 == 0 || search % 2 == 0 {
        return Err(Error::Parameter("nlm template and search sizes must be odd".into()));
    }
    if template >= search {
        return Err(Error::Parameter(format!(
            "nlm template ({template}) must be smaller than the search window ({search})"
        )));
    }
    if search > img.width() || search > img.height() {
        return Err(Error::Parameter(format!(
            "search window {search} larger than {}x{} image",
            img.width(),
            img.height()
        )));
    }

    let f = FloatImage::from_gray(img);
    let tr = (template / 2) as isize;
    let sr = (search / 2) as isize;
    let h2 = h * h;
    let noise = 2.0 * sigma_n * sigma_n;

    let mut out = FloatImage::zeros(img.width(), img.height());
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut wsum = 0.0;
            let mut acc = 0.0;
            for qy in y - sr..=y + sr {
                for qx in x - sr..=x + sr {
                    let d2 = patch_distance_sq(&f, x, y, qx, qy, tr);
                    let w = (-((d2 - noise).max(0.0)) / h2).exp();
                    wsum += w;
                    acc += w * f.get_clamped(qx, qy);
                }
            }
            out.set(x as usize, y as usize, acc / wsum);
        }
    }
    Ok(out.round_to_gray())
}

/// Non-local means with pure patch-distance weighting (sigma_n = 0).
pub fn nlm_denoise(img: &GrayImage, h: f64, template: usize, search: usize) -> Result<GrayImage> {
    nlm_denoise_with_noise(img, h, 0.0, template, search)
}
