//! Cross-split near-duplicate detection.
//!
//! Two images are near-duplicates when every pixel differs by at most the
//! tolerance, either directly or after mirroring one of them. Candidate pairs
//! are pre-filtered by mean intensity: a per-pixel bound of `tol` implies the
//! means differ by at most `tol`, and mirroring preserves the mean.

use serde::{Deserialize, Serialize};

use crate::augment::horizontal_flip;
use crate::data::{Dataset, Image};

/// Half an 8-bit quantization step, so CSV round-tripped copies still match.
pub const DEFAULT_TOLERANCE: f32 = 0.5 / 255.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageCounts {
    pub train_val: u64,
    pub train_test: u64,
    pub val_test: u64,
}

impl LeakageCounts {
    pub fn total(&self) -> u64 {
        self.train_val + self.train_test + self.val_test
    }
}

pub fn count_leakage(train: &Dataset, val: &Dataset, test: &Dataset, tol: f32) -> LeakageCounts {
    LeakageCounts {
        train_val: count_near_duplicate_pairs(train, val, tol),
        train_test: count_near_duplicate_pairs(train, test, tol),
        val_test: count_near_duplicate_pairs(val, test, tol),
    }
}

/// Number of `(a, b)` pairs, `a` from `left` and `b` from `right`, that are
/// near-duplicates (directly or mirrored).
pub fn count_near_duplicate_pairs(left: &Dataset, right: &Dataset, tol: f32) -> u64 {
    if left.is_empty() || right.is_empty() || left.image_shape() != right.image_shape() {
        return 0;
    }
    let mut keyed: Vec<(f64, &Image)> = right.items().iter().map(|s| (mean(&s.image), &s.image)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let means: Vec<f64> = keyed.iter().map(|k| k.0).collect();
    // f32 pixel sums carry rounding; widen the window slightly.
    let window = tol as f64 + 1e-6;

    let mut count = 0;
    for s in left.items() {
        let m = mean(&s.image);
        let lo = means.partition_point(|&v| v < m - window);
        let hi = means.partition_point(|&v| v <= m + window);
        if lo == hi {
            continue;
        }
        let mirrored = horizontal_flip(&s.image);
        for (_, other) in &keyed[lo..hi] {
            if within(&s.image, other, tol) || within(&mirrored, other, tol) {
                count += 1;
            }
        }
    }
    count
}

fn mean(img: &Image) -> f64 {
    img.pixels().iter().map(|&p| p as f64).sum::<f64>() / img.pixels().len() as f64
}

fn within(a: &Image, b: &Image, tol: f32) -> bool {
    a.pixels().iter().zip(b.pixels()).all(|(x, y)| (x - y).abs() <= tol)
}
