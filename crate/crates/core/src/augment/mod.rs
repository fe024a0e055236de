//! Hybrid data augmentation: horizontal flip, correlated Gaussian noise and
//! the policy that combines them.

pub mod flip;
pub mod noise;
pub mod policy;

pub use flip::{horizontal_flip, FlipMap};
pub use noise::{add_gaussian_noise, bivariate_gaussian_pdf, sample_bivariate, NoiseParams};
pub use policy::{
    apply_policy, apply_policy_with_provenance, derive_item_seed, AugmentationPolicy, Provenance,
    Variant,
};
pub use crate::rng::SeededStream;
