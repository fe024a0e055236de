//! Desk-scale stand-in dataset: three shape classes that keep their label
//! under horizontal flip.

use super::dataset::{Dataset, Sample, Source};
use super::image::{Image, CANONICAL_SIDE};
use super::label::EmotionLabel;
use crate::error::{Error, Result};
use crate::rng::SeededStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticShape {
    Disk,
    HorizontalBar,
    VerticalBar,
}

impl SyntheticShape {
    pub const ALL: [SyntheticShape; 3] = [
        SyntheticShape::Disk,
        SyntheticShape::HorizontalBar,
        SyntheticShape::VerticalBar,
    ];

    /// Disk → angry (0), horizontal bar → disgust (1), vertical bar → fear (2).
    pub fn label(self) -> EmotionLabel {
        match self {
            SyntheticShape::Disk => EmotionLabel::Angry,
            SyntheticShape::HorizontalBar => EmotionLabel::Disgust,
            SyntheticShape::VerticalBar => EmotionLabel::Fear,
        }
    }

    /// Binary mask for a given jitter. Every mask is mirror-symmetric about
    /// the vertical center line.
    pub fn mask(self, jitter: i64) -> Vec<bool> {
        const S: usize = CANONICAL_SIDE;
        let c = (S as f64 - 1.0) / 2.0;
        let mut m = vec![false; S * S];
        for y in 0..S {
            for x in 0..S {
                let (xi, yi) = (x as i64, y as i64);
                m[y * S + x] = match self {
                    SyntheticShape::Disk => {
                        let r = (DISK_RADIUS + jitter) as f64;
                        let (dx, dy) = (x as f64 - c, y as f64 - c);
                        dx * dx + dy * dy <= r * r
                    }
                    SyntheticShape::HorizontalBar => {
                        (22 + jitter..26 + jitter).contains(&yi) && (8..40).contains(&xi)
                    }
                    SyntheticShape::VerticalBar => {
                        (22..26).contains(&xi) && (8 + jitter..40 + jitter).contains(&yi)
                    }
                };
            }
        }
        m
    }

    fn max_jitter(self) -> i64 {
        match self {
            SyntheticShape::Disk => 3,
            _ => 4,
        }
    }
}

const DISK_RADIUS: i64 = 10;

/// `n_per_class` images of each shape, interleaved disk, horizontal bar,
/// vertical bar. Jitter: disk radius ±3 px, bar vertical position ±4 px;
/// foreground brightness uniform in `[0.7, 1.0)` on a black background.
pub fn generate_synthetic(n_per_class: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::invalid("n_per_class must be at least 1"));
    }
    let mut stream = SeededStream::new(seed);
    let mut items = Vec::with_capacity(3 * n_per_class);
    for _ in 0..n_per_class {
        for shape in SyntheticShape::ALL {
            let j = shape.max_jitter();
            let jitter = stream.range_inclusive(-j, j);
            let brightness = stream.uniform(0.7, 1.0) as f32;
            let pixels = shape
                .mask(jitter)
                .into_iter()
                .map(|on| if on { brightness } else { 0.0 })
                .collect();
            let image = Image::new(CANONICAL_SIDE, CANONICAL_SIDE, pixels)?;
            items.push(Sample::new(image, shape.label()));
        }
    }
    Dataset::new(items, Source::Synthetic)
}
