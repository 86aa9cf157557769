//! Canny edge detection: Gaussian smooth, Sobel gradients, non-maximum
//! suppression, double-threshold hysteresis.

use crate::error::{Error, Result};

use super::blur::blur_float;
use super::{BinaryImage, FloatImage, GrayImage};

const SMOOTH_KERNEL: usize = 5;
const SMOOTH_SIGMA: f64 = 1.4;

/// Sobel 3x3 gradients with edge replication.
fn sobel(img: &FloatImage) -> (FloatImage, FloatImage) {
    let mut gx = FloatImage::zeros(img.width, img.height);
    let mut gy = FloatImage::zeros(img.width, img.height);
    for y in 0..img.height as isize {
        for x in 0..img.width as isize {
            let p = |dx: isize, dy: isize| img.get_clamped(x + dx, y + dy);
            let sx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let sy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            gx.set(x as usize, y as usize, sx);
            gy.set(x as usize, y as usize, sy);
        }
    }
    (gx, gy)
}

/// Quantize the gradient direction into 0, 45, 90 or 135 degrees.
#[inline]
fn direction_bin(gx: f64, gy: f64) -> u8 {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        0
    } else if angle < 67.5 {
        1 // 45 degrees
    } else if angle < 112.5 {
        2 // 90 degrees
    } else {
        3 // 135 degrees
    }
}

/// Keep only pixels that are local maxima along their gradient direction.
/// The comparison is strict against the second neighbor so that symmetric
/// two-pixel plateaus thin to a single pixel. The outermost one-pixel border
/// is suppressed.
fn non_maximum_suppression(mag: &FloatImage, gx: &FloatImage, gy: &FloatImage) -> FloatImage {
    let mut out = FloatImage::zeros(mag.width, mag.height);
    if mag.width < 3 || mag.height < 3 {
        return out;
    }
    for y in 1..mag.height - 1 {
        for x in 1..mag.width - 1 {
            let m = mag.get(x, y);
            let (a, b) = match direction_bin(gx.get(x, y), gy.get(x, y)) {
                0 => (mag.get(x - 1, y), mag.get(x + 1, y)),
                1 => (mag.get(x + 1, y + 1), mag.get(x - 1, y - 1)),
                2 => (mag.get(x, y - 1), mag.get(x, y + 1)),
                _ => (mag.get(x - 1, y + 1), mag.get(x + 1, y - 1)),
            };
            if m >= a && m > b {
                out.set(x, y, m);
            }
        }
    }
    out
}

/// Double-threshold hysteresis: strong pixels (>= high) seed a breadth-first
/// walk that retains every 8-connected pixel whose magnitude is >= low.
fn hysteresis(nms: &FloatImage, low: f64, high: f64) -> BinaryImage {
    let w = nms.width;
    let h = nms.height;
    let mut out = vec![0u8; w * h];
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if nms.get(x, y) >= high && out[y * w + x] == 0 {
                out[y * w + x] = 255;
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for dy in -1isize..=1 {
                        for dx in -1isize..=1 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            let nx = cx as isize + dx;
                            let ny = cy as isize + dy;
                            if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                                continue;
                            }
                            let (nx, ny) = (nx as usize, ny as usize);
                            if out[ny * w + nx] == 0 && nms.get(nx, ny) >= low {
                                out[ny * w + nx] = 255;
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
    }
    BinaryImage::from_raw_unchecked(w, h, out)
}

/// Standard four-phase Canny detector. Thresholds apply to the Sobel
/// gradient magnitude sqrt(gx^2 + gy^2) of the internally smoothed image
/// (Gaussian kernel 5, sigma 1.4).
pub fn canny(img: &GrayImage, low: f64, high: f64) -> Result<BinaryImage> {
    if low < 0.0 || low >= high {
        return Err(Error::Parameter(format!(
            "canny thresholds must satisfy 0 <= low < high, got {low} / {high}"
        )));
    }
    let smoothed = blur_float(&FloatImage::from_gray(img), SMOOTH_KERNEL, SMOOTH_SIGMA);
    let (gx, gy) = sobel(&smoothed);
    let mut mag = FloatImage::zeros(img.width(), img.height());
    for i in 0..mag.data.len() {
        mag.data[i] = (gx.data[i] * gx.data[i] + gy.data[i] * gy.data[i]).sqrt();
    }
    let nms = non_maximum_suppression(&mag, &gx, &gy);
    Ok(hysteresis(&nms, low, high))
}
