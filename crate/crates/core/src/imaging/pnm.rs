//! Binary PGM (P5) and PPM (P6) reading and writing.
//!
//! Only maxval 255 is accepted. Comments are tolerated when reading headers
//! and never written.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{BinaryImage, GrayImage, RgbImage};

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_binary_pgm(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_ppm(img: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    /// Skip whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos > start {
            Some(&self.bytes[start..self.pos])
        } else {
            None
        }
    }

    fn number(&mut self) -> Option<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok).ok()?.parse().ok()
    }
}

fn parse_header(bytes: &[u8], magic: &str) -> std::result::Result<(usize, usize, usize), String> {
    let mut rd = HeaderReader { bytes, pos: 0 };
    match rd.token() {
        Some(tok) if tok == magic.as_bytes() => {}
        Some(tok) => {
            return Err(format!("expected magic {magic}, found {:?}", String::from_utf8_lossy(tok)))
        }
        None => return Err("empty file".into()),
    }
    let width = rd.number().ok_or("missing or invalid width")?;
    let height = rd.number().ok_or("missing or invalid height")?;
    let maxval = rd.number().ok_or("missing or invalid maxval")?;
    if maxval != 255 {
        return Err(format!("maxval must be 255, got {maxval}"));
    }
    if width == 0 || height == 0 {
        return Err("dimensions must be positive".into());
    }
    // Exactly one whitespace byte separates the header from the raster.
    if rd.pos >= bytes.len() || !bytes[rd.pos].is_ascii_whitespace() {
        return Err("missing separator before raster data".into());
    }
    Ok((width, height, rd.pos + 1))
}

pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let (width, height, offset) = parse_header(bytes, "P5")?;
    let need = width * height;
    let raster = &bytes[offset..];
    if raster.len() < need {
        return Err(format!("raster truncated: have {} bytes, need {need}", raster.len()));
    }
    GrayImage::new(width, height, raster[..need].to_vec()).map_err(|e| e.to_string())
}

pub fn decode_ppm(bytes: &[u8]) -> std::result::Result<RgbImage, String> {
    let (width, height, offset) = parse_header(bytes, "P6")?;
    let need = 3 * width * height;
    let raster = &bytes[offset..];
    if raster.len() < need {
        return Err(format!("raster truncated: have {} bytes, need {need}", raster.len()));
    }
    RgbImage::new(width, height, raster[..need].to_vec()).map_err(|e| e.to_string())
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes).map_err(|msg| Error::format(path, msg))
}

pub fn write_ppm(path: &Path, img: &RgbImage) -> Result<()> {
    fs::write(path, encode_ppm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ppm(&bytes).map_err(|msg| Error::format(path, msg))
}
