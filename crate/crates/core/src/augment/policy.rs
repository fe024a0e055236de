use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flip::horizontal_flip;
use super::noise::{add_gaussian_noise, NoiseParams};
use crate::data::{Dataset, Sample, Source};
use crate::error::{Error, Result};
use crate::rng::mix64;

/// Per-item seed for a noised variant.
///
/// `mix64(mix64(mix64(base_seed) ^ item_index) ^ variant_index)` where
/// `mix64` is the SplitMix64 finalizer. Each stage is a bijection, so for a
/// fixed base seed distinct item indices never collide before the variant is
/// folded in.
pub fn derive_item_seed(base_seed: u64, item_index: u64, variant_index: u64) -> u64 {
    mix64(mix64(mix64(base_seed) ^ item_index) ^ variant_index)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original = 0,
    Flip = 1,
    Noise = 2,
    FlipNoise = 3,
}

impl Variant {
    pub fn index(self) -> u64 {
        self as u64
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Flip => "flip",
            Variant::Noise => "noise",
            Variant::FlipNoise => "flip_noise",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentationPolicy {
    pub include_original: bool,
    pub include_flip: bool,
    pub include_noise: bool,
    pub include_flip_noise: bool,
    pub noise: NoiseParams,
    pub clamp: bool,
    pub base_seed: u64,
}

impl Default for AugmentationPolicy {
    /// All four variants (×4), σ = 0.1 noise, clamping on.
    fn default() -> Self {
        Self {
            include_original: true,
            include_flip: true,
            include_noise: true,
            include_flip_noise: true,
            noise: NoiseParams::default(),
            clamp: true,
            base_seed: 0,
        }
    }
}

impl AugmentationPolicy {
    /// Keeps only the original images.
    pub fn identity() -> Self {
        Self {
            include_original: true,
            include_flip: false,
            include_noise: false,
            include_flip_noise: false,
            ..Self::default()
        }
    }

    pub fn flip_only() -> Self {
        Self {
            include_original: false,
            include_flip: true,
            ..Self::identity()
        }
    }

    pub fn variants(&self) -> Vec<Variant> {
        [
            (self.include_original, Variant::Original),
            (self.include_flip, Variant::Flip),
            (self.include_noise, Variant::Noise),
            (self.include_flip_noise, Variant::FlipNoise),
        ]
        .into_iter()
        .filter_map(|(on, v)| on.then_some(v))
        .collect()
    }

    pub fn expansion_factor(&self) -> usize {
        self.variants().len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.expansion_factor() == 0 {
            return Err(Error::invalid("augmentation policy enables no variant"));
        }
        if self.include_noise || self.include_flip_noise {
            self.noise.validate()?;
        }
        Ok(())
    }
}

/// Where each augmented item came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_index: usize,
    pub variant: Variant,
    /// Noise seed; `None` for variants without noise.
    pub seed: Option<u64>,
}

pub fn apply_policy(ds: &Dataset, policy: &AugmentationPolicy) -> Result<Dataset> {
    apply_policy_with_provenance(ds, policy).map(|(d, _)| d)
}

/// Expands every item into its enabled variants, grouped per source item in
/// the order original, flip, noise, flip+noise. Items are processed in
/// parallel; each noised variant draws from its own derived seed, so the
/// result does not depend on scheduling.
pub fn apply_policy_with_provenance(
    ds: &Dataset,
    policy: &AugmentationPolicy,
) -> Result<(Dataset, Vec<Provenance>)> {
    if ds.is_empty() {
        return Err(Error::invalid("cannot augment an empty dataset"));
    }
    policy.validate()?;
    let variants = policy.variants();

    let expanded: Vec<Vec<(Sample, Provenance)>> = ds
        .items()
        .par_iter()
        .enumerate()
        .map(|(i, sample)| {
            variants
                .iter()
                .map(|&variant| {
                    let seed = matches!(variant, Variant::Noise | Variant::FlipNoise)
                        .then(|| derive_item_seed(policy.base_seed, i as u64, variant.index()));
                    let image = match variant {
                        Variant::Original => sample.image.clone(),
                        Variant::Flip => horizontal_flip(&sample.image),
                        Variant::Noise => add_gaussian_noise(
                            &sample.image,
                            &policy.noise,
                            seed.unwrap_or_default(),
                            policy.clamp,
                        )?,
                        Variant::FlipNoise => add_gaussian_noise(
                            &horizontal_flip(&sample.image),
                            &policy.noise,
                            seed.unwrap_or_default(),
                            policy.clamp,
                        )?,
                    };
                    let out = Sample {
                        image,
                        label: sample.label,
                        usage: sample.usage,
                    };
                    Ok((out, Provenance { source_index: i, variant, seed }))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let (items, provenance): (Vec<_>, Vec<_>) = expanded.into_iter().flatten().unzip();
    Ok((Dataset::new(items, Source::Augmented)?, provenance))
}
