//! Correlated Gaussian pixel noise.
//!
//! Pixels are consumed as consecutive pairs in row-major order; each pair
//! gets one draw from the bivariate normal with means `(mu1, mu2)`, standard
//! deviations `(sigma1, sigma2)` and correlation `rho`. At `rho = 0` with
//! equal parameters this is ordinary i.i.d. per-pixel noise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::Image;
use crate::error::{Error, Result};
use crate::rng::SeededStream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl Default for NoiseParams {
    /// Zero-mean, σ = 0.1 in `[0, 1]` intensity units, uncorrelated.
    fn default() -> Self {
        Self::isotropic(0.1)
    }
}

impl NoiseParams {
    pub fn new(mu1: f64, mu2: f64, sigma1: f64, sigma2: f64, rho: f64) -> Result<Self> {
        let p = Self {
            mu1,
            mu2,
            sigma1,
            sigma2,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    /// Zero-mean, uncorrelated, equal standard deviations.
    pub fn isotropic(sigma: f64) -> Self {
        Self {
            mu1: 0.0,
            mu2: 0.0,
            sigma1: sigma,
            sigma2: sigma,
            rho: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu1.is_finite() && self.mu2.is_finite()) {
            return Err(Error::invalid("noise means must be finite"));
        }
        if !(self.sigma1 > 0.0 && self.sigma2 > 0.0 && self.sigma1.is_finite() && self.sigma2.is_finite()) {
            return Err(Error::invalid(format!(
                "noise standard deviations must be positive, got ({}, {})",
                self.sigma1, self.sigma2
            )));
        }
        if self.rho.is_nan() || self.rho.abs() >= 1.0 {
            return Err(Error::invalid(format!("noise correlation must satisfy |rho| < 1, got {}", self.rho)));
        }
        Ok(())
    }
}

/// Bivariate normal density at `(x, y)`.
pub fn bivariate_gaussian_pdf(x: f64, y: f64, p: &NoiseParams) -> Result<f64> {
    p.validate()?;
    let one_minus_rho2 = 1.0 - p.rho * p.rho;
    let dx = (x - p.mu1) / p.sigma1;
    let dy = (y - p.mu2) / p.sigma2;
    let quad = dx * dx - 2.0 * p.rho * dx * dy + dy * dy;
    let norm = 2.0 * PI * p.sigma1 * p.sigma2 * one_minus_rho2.sqrt();
    Ok((-quad / (2.0 * one_minus_rho2)).exp() / norm)
}

/// One correlated draw: Box–Muller standard normals `z1, z2`, then
/// `(mu1 + sigma1 z1, mu2 + sigma2 (rho z1 + sqrt(1 - rho^2) z2))`.
pub fn sample_bivariate(p: &NoiseParams, stream: &mut SeededStream) -> Result<(f64, f64)> {
    p.validate()?;
    Ok(draw(p, stream))
}

#[inline]
fn draw(p: &NoiseParams, stream: &mut SeededStream) -> (f64, f64) {
    let (z1, z2) = stream.standard_normal_pair();
    let a = p.mu1 + p.sigma1 * z1;
    let b = p.mu2 + p.sigma2 * (p.rho * z1 + (1.0 - p.rho * p.rho).sqrt() * z2);
    (a, b)
}

/// Adds one bivariate draw per horizontal pixel pair. An odd trailing pixel
/// receives the first component of a final draw. With `clamp`, results are
/// clipped to `[0, 1]`; without it the output may leave that range.
pub fn add_gaussian_noise(img: &Image, p: &NoiseParams, seed: u64, clamp: bool) -> Result<Image> {
    p.validate()?;
    let mut stream = SeededStream::new(seed);
    let mut out: Vec<f32> = img.pixels().to_vec();
    for pair in out.chunks_mut(2) {
        let (a, b) = draw(p, &mut stream);
        pair[0] = (pair[0] as f64 + a) as f32;
        if let Some(second) = pair.get_mut(1) {
            *second = (*second as f64 + b) as f32;
        }
    }
    if clamp {
        for v in &mut out {
            *v = v.clamp(0.0, 1.0);
        }
    }
    Ok(Image::from_raw(img.width(), img.height(), out))
}
