use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Scalar type the network runs in: `f32` for training, `f64` for gradient checks.
pub trait Real:
    Float + AddAssign + SubAssign + MulAssign + Sum + Default + Debug + Send + Sync + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;

    /// `y += alpha * x`.
    #[inline]
    fn axpy(alpha: Self, x: &[Self], y: &mut [Self]) {
        axpy_lanes(alpha, x, y)
    }

    /// Dot product with a fixed eight-lane accumulation order, so the result
    /// is identical on every run and every target.
    #[inline]
    fn dot(x: &[Self], y: &[Self]) -> Self {
        dot_lanes(x, y)
    }

    #[inline]
    fn sum_slice(x: &[Self]) -> Self {
        let mut acc = [Self::zero(); 8];
        let mut c = x.chunks_exact(8);
        for a in &mut c {
            for k in 0..8 {
                acc[k] += a[k];
            }
        }
        let tail: Self = c.remainder().iter().copied().sum();
        ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
    }
}

#[inline(always)]
fn axpy_lanes<T: Float + AddAssign>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline(always)]
fn dot_lanes<T: Float + AddAssign>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [T::zero(); 8];
    let mut xc = x.chunks_exact(8);
    let mut yc = y.chunks_exact(8);
    for (a, b) in (&mut xc).zip(&mut yc) {
        for k in 0..8 {
            acc[k] += a[k] * b[k];
        }
    }
    let mut tail = T::zero();
    for (&a, &b) in xc.remainder().iter().zip(yc.remainder()) {
        tail += a * b;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

// Same loops compiled with 256-bit registers. No FMA: rounding matches the
// portable path exactly.
#[cfg(target_arch = "x86_64")]
mod wide {
    #[target_feature(enable = "avx")]
    pub unsafe fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
        super::axpy_lanes(alpha, x, y)
    }

    #[target_feature(enable = "avx")]
    pub unsafe fn dot(x: &[f32], y: &[f32]) -> f32 {
        super::dot_lanes(x, y)
    }
}

impl Real for f32 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { wide::axpy(alpha, x, y) };
        }
        axpy_lanes(alpha, x, y)
    }

    #[inline]
    fn dot(x: &[f32], y: &[f32]) -> f32 {
        #[cfg(target_arch = "x86_64")]
        if std::is_x86_feature_detected!("avx") {
            // SAFETY: the feature was detected at runtime.
            return unsafe { wide::dot(x, y) };
        }
        dot_lanes(x, y)
    }
}

impl Real for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}
