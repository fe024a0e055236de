//! Facial-expression recognition experiments with hybrid data augmentation.
//!
//! * [`data`]: FER2013 CSV and CK+ PGM ingestion, resizing, splits.
//! * [`augment`]: horizontal flip, correlated Gaussian noise, augmentation policies.
//! * [`model`]: a from-scratch CNN stack (conv, depthwise-separable, residual) with Adam.
//! * [`engine`]: training loop, accuracy metrics, baseline-vs-augmented experiments.

pub mod augment;
pub mod data;
pub mod engine;
pub mod error;
pub mod model;
pub mod rng;

pub use error::{Error, Result};
