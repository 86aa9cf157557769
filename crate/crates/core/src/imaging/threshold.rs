//! Adaptive mean thresholding.

use crate::error::{Error, Result};

use super::{BinaryImage, GrayImage};

/// Binarize by comparing each pixel against the mean of its block x block
/// neighborhood (edge-replicated) minus the offset `c`:
/// out = 255 if pixel > mean - c, else 0.
pub fn adaptive_threshold(img: &GrayImage, block: usize, c: f64) -> Result<BinaryImage> {
    if block % 2 == 0 || block < 3 {
        return Err(Error::Parameter(format!("threshold block must be odd and >= 3, got {block}")));
    }
    let r = (block / 2) as isize;
    let count = (block * block) as f64;
    let mut data = Vec::with_capacity(img.width() * img.height());
    for y in 0..img.height() as isize {
        for x in 0..img.width() as isize {
            let mut sum = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    sum += img.get_clamped(x + dx, y + dy) as f64;
                }
            }
            let mean = sum / count;
            let v = img.get_clamped(x, y) as f64;
            data.push(if v > mean - c { 255 } else { 0 });
        }
    }
    Ok(BinaryImage::from_raw_unchecked(img.width(), img.height(), data))
}
