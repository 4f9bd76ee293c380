//! Grayscale images in `[0, 1]`, PGM input/output, salt-and-pepper noise,
//! the 3×3 median filter and PSNR.

use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;

use super::rng::{stream, support};
use crate::error::{Error, Result};

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

/// `p × q` pixels, rows top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pixels: DMatrix<f64>,
}

impl GrayImage {
    pub fn new(pixels: DMatrix<f64>) -> Result<Self> {
        if pixels.is_empty() {
            return Err(Error::ImageFormat("image has no pixels".into()));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ImageFormat(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self { pixels })
    }

    pub fn filled(p: usize, q: usize, value: f64) -> Result<Self> {
        Self::new(DMatrix::from_element(p, q, value))
    }

    pub fn rows(&self) -> usize {
        self.pixels.nrows()
    }

    pub fn cols(&self) -> usize {
        self.pixels.ncols()
    }

    pub fn pixels(&self) -> &DMatrix<f64> {
        &self.pixels
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[(r, c)]
    }

    /// Pixel at `(r, c)` with coordinates clamped into the image.
    pub fn clamped(&self, r: isize, c: isize) -> f64 {
        let r = r.clamp(0, self.rows() as isize - 1) as usize;
        let c = c.clamp(0, self.cols() as isize - 1) as usize;
        self.pixels[(r, c)]
    }

    /// `h × w` window starting at `(r, c)`.
    pub fn crop(&self, r: usize, c: usize, h: usize, w: usize) -> Result<Self> {
        if h == 0 || w == 0 || r + h > self.rows() || c + w > self.cols() {
            return Err(Error::DimensionMismatch(format!(
                "crop {h}x{w} at ({r}, {c}) outside {}x{} image",
                self.rows(),
                self.cols()
            )));
        }
        Self::new(self.pixels.view((r, c), (h, w)).into_owned())
    }
}

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Tokens<'_> {
    fn skip_space(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while self.data.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn next(&mut self, what: &str) -> Result<usize> {
        self.skip_space();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ImageFormat(format!("expected {what}")))
    }
}

/// Decodes a P2 (ASCII) or P5 (binary) graymap.
pub fn decode_pgm(data: &[u8]) -> Result<GrayImage> {
    let binary = match data.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err(Error::ImageFormat("not a P2/P5 graymap".into())),
    };
    let mut t = Tokens { data, pos: 2 };
    let q = t.next("width")?;
    let p = t.next("height")?;
    let maxval = t.next("maxval")?;
    if p == 0 || q == 0 {
        return Err(Error::ImageFormat("zero image dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::ImageFormat(format!("maxval {maxval} out of range")));
    }
    let scale = maxval as f64;
    let mut raw = Vec::with_capacity(p * q);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = t.pos + 1;
        let bytes = if maxval < 256 { 1 } else { 2 };
        let body = data
            .get(start..start + p * q * bytes)
            .ok_or_else(|| Error::ImageFormat("raster is truncated".into()))?;
        if bytes == 1 {
            raw.extend(body.iter().map(|&b| b as usize));
        } else {
            raw.extend(body.chunks_exact(2).map(|c| ((c[0] as usize) << 8) | c[1] as usize));
        }
    } else {
        for _ in 0..p * q {
            raw.push(t.next("pixel value")?);
        }
    }
    if let Some(v) = raw.iter().find(|&&v| v > maxval) {
        return Err(Error::ImageFormat(format!("pixel {v} exceeds maxval {maxval}")));
    }
    GrayImage::new(DMatrix::from_fn(p, q, |r, c| raw[r * q + c] as f64 / scale))
}

/// Encodes as binary P5 with maxval 255.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    for r in 0..img.rows() {
        for c in 0..img.cols() {
            out.push((img.get(r, c).clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    decode_pgm(&std::fs::read(path)?)
}

pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    std::fs::write(path, encode_pgm(img))?;
    Ok(())
}

/// Sets exactly `round(rho · p · q)` distinct pixels to 0 or 1, each with
/// probability ½.
pub fn salt_pepper(img: &GrayImage, rho: f64, seed: u64) -> Result<GrayImage> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::InvalidConfig(format!("rho must lie in [0, 1], got {rho}")));
    }
    let (p, q) = (img.rows(), img.cols());
    let count = (rho * (p * q) as f64).round() as usize;
    let mut rng = stream(seed, 0);
    let mut out = img.pixels.clone();
    for k in support(&mut rng, p * q, count) {
        out[(k / q, k % q)] = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
    }
    GrayImage::new(out)
}

/// Median over each pixel's 3×3 neighborhood, replicating border pixels.
pub fn median_filter_3x3(img: &GrayImage) -> GrayImage {
    let out = DMatrix::from_fn(img.rows(), img.cols(), |r, c| {
        let mut w = [0.0; 9];
        for (k, v) in w.iter_mut().enumerate() {
            *v = img.clamped(r as isize + k as isize / 3 - 1, c as isize + k as isize % 3 - 1);
        }
        w.sort_by(|a, b| a.total_cmp(b));
        w[4]
    });
    GrayImage { pixels: out }
}

/// Mean squared pixel error `‖X − X̂‖²_F / (p q)`.
pub fn mse(reference: &GrayImage, estimate: &GrayImage) -> Result<f64> {
    if reference.pixels.shape() != estimate.pixels.shape() {
        return Err(Error::DimensionMismatch(format!(
            "reference is {:?}, estimate {:?}",
            reference.pixels.shape(),
            estimate.pixels.shape()
        )));
    }
    Ok((&reference.pixels - &estimate.pixels).norm_squared() / reference.pixels.len() as f64)
}

/// PSNR in dB of a mean squared error at unit peak, capped at
/// [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        (-10.0 * mse.log10()).min(PSNR_CAP_DB)
    }
}

/// `−10 log₁₀(‖X − X̂‖²_F / (p q))` for unit peak.
pub fn psnr(reference: &GrayImage, estimate: &GrayImage) -> Result<f64> {
    Ok(psnr_from_mse(mse(reference, estimate)?))
}
