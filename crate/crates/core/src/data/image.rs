use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical side length of every image fed to the models.
pub const CANONICAL_SIDE: usize = 48;

/// Single-channel intensity grid, row-major, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be nonzero"));
        }
        if pixels.len() != width * height {
            return Err(Error::shape(format!(
                "{}x{} image needs {} pixels, got {}",
                width,
                height,
                width * height,
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid(format!("pixel value {p} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image from 8-bit intensities, dividing by 255.
    pub fn from_u8(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::new(width, height, bytes.iter().map(|&b| b as f32 / 255.0).collect())
    }

    /// Invariant-preserving constructor for transforms that already clamp.
    pub(crate) fn from_raw(width: usize, height: usize, pixels: Vec<f32>) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.pixels[y * self.width + x]
    }

    /// Quantizes back to 8-bit intensities (`round(p * 255)`).
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| (p * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.pixels
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            })
    }
}

/// Bilinear resampling with corner-aligned sample coordinates: output column
/// `i` samples input position `i * (w_in - 1) / (w_out - 1)` (and likewise for
/// rows), so the four corners map exactly onto the input corners. A
/// one-pixel output axis samples input coordinate 0.
pub fn resize_bilinear(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid(format!(
            "output dimensions must be nonzero, got {out_w}x{out_h}"
        )));
    }
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }

    let xs = sample_positions(img.width, out_w);
    let ys = sample_positions(img.height, out_h);
    let mut pixels = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = lerp(img.get(x0, y0) as f64, img.get(x1, y0) as f64, fx);
            let bottom = lerp(img.get(x0, y1) as f64, img.get(x1, y1) as f64, fx);
            // Convex combination of values in [0,1]; clamp only absorbs rounding.
            pixels.push(lerp(top, bottom, fy).clamp(0.0, 1.0) as f32);
        }
    }
    Ok(Image::from_raw(out_w, out_h, pixels))
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// For each output index: (lower source index, upper source index, fraction).
fn sample_positions(len_in: usize, len_out: usize) -> Vec<(usize, usize, f64)> {
    (0..len_out)
        .map(|i| {
            if len_out == 1 || len_in == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (len_in - 1) as f64 / (len_out - 1) as f64;
            let lo = (pos.floor() as usize).min(len_in - 1);
            let hi = (lo + 1).min(len_in - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}
