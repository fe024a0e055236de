//! Baseline-vs-augmented comparison runs.

use serde::{Deserialize, Serialize};

use super::leakage::{count_leakage, LeakageCounts, DEFAULT_TOLERANCE};
use super::metrics::ConfusionMatrix;
use super::train::{evaluate, train, EpochMetrics, TrainConfig};
use crate::augment::{add_gaussian_noise, apply_policy, derive_item_seed, AugmentationPolicy, NoiseParams};
use crate::data::{split_indices, usage_indices, Dataset, Sample, SplitIndices, SplitSpec, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::model::{build_model_for, Shape3};
use crate::rng::mix64;

/// When the augmentation policy is applied relative to splitting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Split first, augment only the training part.
    #[default]
    AugmentAfterSplit,
    /// Augment the whole dataset, then split the expanded set.
    AugmentBeforeSplit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitMode {
    Ratio(SplitSpec),
    Usage,
}

/// Everything about a comparison run other than the data, policy and trainer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    pub split: SplitMode,
    pub protocol: Protocol,
    /// Optional clamped noise applied to every test image in both arms.
    pub test_noise: Option<NoiseParams>,
    pub test_noise_seed: u64,
    pub leakage_tolerance: f32,
}

impl Default for ExperimentSetup {
    fn default() -> Self {
        Self {
            split: SplitMode::Ratio(SplitSpec::eight_one_one(0)),
            protocol: Protocol::AugmentAfterSplit,
            test_noise: None,
            test_noise_seed: 0,
            leakage_tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    /// 0-based index into `history`.
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
    pub test_loss: f64,
    /// One-vs-rest `(TP + TN) / total` per class, label order.
    pub test_per_class_acc: [f64; NUM_CLASSES],
    pub test_confusion: ConfusionMatrix,
    pub leakage: LeakageCounts,
    pub optimizer_steps: u64,
    pub history: Vec<EpochMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model: String,
    pub protocol: Protocol,
    pub train_seed: u64,
    pub policy: AugmentationPolicy,
    pub setup: ExperimentSetup,
    pub expansion_factor: usize,
    pub baseline: ArmReport,
    pub hda: ArmReport,
    pub arms_identical: bool,
    pub test_acc_delta: f64,
}

/// Runs the baseline arm (no augmentation) and the HDA arm with identical
/// seeds, selecting each arm's parameters at its best validation epoch.
pub fn run_experiment(
    ds: &Dataset,
    policy: &AugmentationPolicy,
    config: &TrainConfig,
    setup: &ExperimentSetup,
) -> Result<ComparisonReport> {
    if ds.is_empty() {
        return Err(Error::invalid("experiment dataset is empty"));
    }
    policy.validate()?;
    config.validate()?;
    if let Some(n) = &setup.test_noise {
        n.validate()?;
    }

    let baseline = run_arm(&baseline_splits(ds, &setup.split)?, config, setup)?;
    let hda_parts = augmented_splits(ds, policy, &setup.split, setup.protocol)?;
    let hda = run_arm(&hda_parts, config, setup)?;

    let arms_identical = baseline == hda;
    Ok(ComparisonReport {
        model: config.model_name.to_string(),
        protocol: setup.protocol,
        train_seed: config.seed,
        policy: *policy,
        setup: *setup,
        expansion_factor: policy.expansion_factor(),
        test_acc_delta: hda.test_acc - baseline.test_acc,
        baseline,
        hda,
        arms_identical,
    })
}

/// `(train, val, test)` without augmentation.
pub fn baseline_splits(ds: &Dataset, mode: &SplitMode) -> Result<(Dataset, Dataset, Dataset)> {
    Ok(split(ds, mode)?.apply(ds))
}

/// `(train, val, test)` with `policy` applied according to `protocol`. After
/// splitting only the training part is expanded; before splitting every
/// variant of every item is a candidate for any part.
pub fn augmented_splits(
    ds: &Dataset,
    policy: &AugmentationPolicy,
    mode: &SplitMode,
    protocol: Protocol,
) -> Result<(Dataset, Dataset, Dataset)> {
    match protocol {
        Protocol::AugmentAfterSplit => {
            let (tr, va, te) = baseline_splits(ds, mode)?;
            Ok((apply_policy(&tr, policy)?, va, te))
        }
        Protocol::AugmentBeforeSplit => baseline_splits(&apply_policy(ds, policy)?, mode),
    }
}

fn split(ds: &Dataset, mode: &SplitMode) -> Result<SplitIndices> {
    match mode {
        SplitMode::Ratio(spec) => split_indices(ds, spec),
        SplitMode::Usage => usage_indices(ds),
    }
}

fn run_arm(parts: &(Dataset, Dataset, Dataset), config: &TrainConfig, setup: &ExperimentSetup) -> Result<ArmReport> {
    let (train_set, val_set, test_set) = parts;
    let leakage = count_leakage(train_set, val_set, test_set, setup.leakage_tolerance);
    let test_set = match &setup.test_noise {
        Some(noise) => corrupt(test_set, noise, setup.test_noise_seed)?,
        None => test_set.clone(),
    };
    if test_set.is_empty() {
        return Err(Error::invalid("test split is empty"));
    }

    let (w, h) = train_set
        .image_shape()
        .ok_or_else(|| Error::invalid("training split is empty"))?;
    let spec = build_model_for(config.model_name, Shape3::new(1, h, w), NUM_CLASSES)?;
    let outcome = train(&spec, train_set, val_set, config)?;
    let test = evaluate(&spec, &outcome.best_params, &test_set)?;

    Ok(ArmReport {
        train_size: train_set.len(),
        val_size: val_set.len(),
        test_size: test_set.len(),
        best_epoch: outcome.best_epoch,
        best_val_acc: outcome.history[outcome.best_epoch].val_acc,
        test_acc: test.accuracy,
        test_loss: test.loss,
        test_per_class_acc: test.confusion.per_class_accuracy()?,
        test_confusion: test.confusion,
        leakage,
        optimizer_steps: outcome.optimizer_steps,
        history: outcome.history,
    })
}

/// Copy of `ds` with clamped noise on every item, seeded per item index.
pub fn corrupt(ds: &Dataset, noise: &NoiseParams, seed: u64) -> Result<Dataset> {
    let items = ds
        .items()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(Sample {
                image: add_gaussian_noise(&s.image, noise, derive_item_seed(seed, i as u64, 0xC0), true)?,
                ..s.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(items, ds.source())
}

/// Per-seed outcomes of repeated comparisons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSweep {
    pub seeds: Vec<u64>,
    pub baseline_test_acc: Vec<f64>,
    pub hda_test_acc: Vec<f64>,
    pub baseline_median: f64,
    pub hda_median: f64,
    pub baseline_best: f64,
    pub hda_best: f64,
}

/// Repeats [`run_experiment`] once per seed. Each seed sets the training
/// seed and the policy's noise base seed; data and split stay fixed.
pub fn run_seed_sweep(
    ds: &Dataset,
    policy: &AugmentationPolicy,
    config: &TrainConfig,
    setup: &ExperimentSetup,
    seeds: &[u64],
) -> Result<(SeedSweep, Vec<ComparisonReport>)> {
    if seeds.is_empty() {
        return Err(Error::invalid("seed sweep needs at least one seed"));
    }
    let mut reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let cfg = TrainConfig { seed, ..config.clone() };
        let pol = AugmentationPolicy { base_seed: mix64(seed ^ policy.base_seed), ..*policy };
        reports.push(run_experiment(ds, &pol, &cfg, setup)?);
    }
    let base: Vec<f64> = reports.iter().map(|r| r.baseline.test_acc).collect();
    let hda: Vec<f64> = reports.iter().map(|r| r.hda.test_acc).collect();
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((
        SeedSweep {
            seeds: seeds.to_vec(),
            baseline_median: median(&base),
            hda_median: median(&hda),
            baseline_best: max(&base),
            hda_best: max(&hda),
            baseline_test_acc: base,
            hda_test_acc: hda,
        },
        reports,
    ))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
