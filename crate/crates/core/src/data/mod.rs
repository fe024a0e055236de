//! Dataset ingestion, normalization and splitting.

pub mod ckplus;
pub mod dataset;
pub mod fer2013;
pub mod image;
pub mod label;
pub mod pgm;
pub mod split;
pub mod synthetic;

pub use ckplus::load_ckplus_dir;
pub use dataset::{summarize, Dataset, DatasetSummary, Sample, Source, Usage};
pub use fer2013::{parse_fer2013_csv, write_fer2013_csv};
pub use image::{resize_bilinear, Image, CANONICAL_SIDE};
pub use label::{EmotionLabel, NUM_CLASSES};
pub use split::{split_by_usage, split_indices, stratified_split, usage_indices, SplitIndices, SplitSpec};
pub use synthetic::generate_synthetic;
