use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Usage};
use super::label::NUM_CLASSES;
use crate::error::{Error, Result};
use crate::rng::{mix64, SeededStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64, stratified: bool) -> Result<Self> {
        let spec = Self {
            train_fraction: train,
            val_fraction: val,
            test_fraction: test,
            seed,
            stratified,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// 8:1:1 stratified split.
    pub fn eight_one_one(seed: u64) -> Self {
        Self {
            train_fraction: 0.8,
            val_fraction: 0.1,
            test_fraction: 0.1,
            seed,
            stratified: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let f = [self.train_fraction, self.val_fraction, self.test_fraction];
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(format!("split fractions must be nonnegative, got {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("split fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }

    /// `(train, val, test)` sizes for a group of `n` items: floor for the
    /// first two, remainder to test.
    pub fn cut_sizes(&self, n: usize) -> (usize, usize, usize) {
        // The epsilon keeps products such as 0.29 * 100 = 28.999999999999996 at 29.
        let floor = |f: f64| ((f * n as f64 + 1e-9).floor() as usize).min(n);
        let train = floor(self.train_fraction);
        let val = floor(self.val_fraction).min(n - train);
        (train, val, n - train - val)
    }
}

/// Item indices of each split, ascending within each part.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn apply(&self, ds: &Dataset) -> (Dataset, Dataset, Dataset) {
        (ds.select(&self.train), ds.select(&self.val), ds.select(&self.test))
    }
}

/// Computes the split assignment for `ds` without copying any images.
///
/// With `stratified`, each class's indices are permuted by a stream seeded
/// from `(spec.seed, class code)` and cut independently; otherwise the whole
/// index range is permuted once and cut.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<SplitIndices> {
    if ds.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    spec.validate()?;

    let groups: Vec<Vec<usize>> = if spec.stratified {
        let mut by_class = vec![Vec::new(); NUM_CLASSES];
        for (i, s) in ds.items().iter().enumerate() {
            by_class[s.label.code()].push(i);
        }
        by_class
    } else {
        vec![(0..ds.len()).collect()]
    };

    let mut out = SplitIndices::default();
    for (g, mut idx) in groups.into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let mut stream = SeededStream::new(spec.seed ^ mix64(g as u64 + 1));
        stream.shuffle(&mut idx);
        let (n_train, n_val, _) = spec.cut_sizes(idx.len());
        out.train.extend_from_slice(&idx[..n_train]);
        out.val.extend_from_slice(&idx[n_train..n_train + n_val]);
        out.test.extend_from_slice(&idx[n_train + n_val..]);
    }
    out.train.sort_unstable();
    out.val.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}

pub fn stratified_split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    Ok(split_indices(ds, spec)?.apply(ds))
}

/// Partitions by usage tag: Training → train, PublicTest → validation,
/// PrivateTest → test.
pub fn usage_indices(ds: &Dataset) -> Result<SplitIndices> {
    let mut out = SplitIndices::default();
    for (i, s) in ds.items().iter().enumerate() {
        match s.usage {
            Some(Usage::Training) => out.train.push(i),
            Some(Usage::PublicTest) => out.val.push(i),
            Some(Usage::PrivateTest) => out.test.push(i),
            None => return Err(Error::MissingUsage { index: i }),
        }
    }
    Ok(out)
}

pub fn split_by_usage(ds: &Dataset) -> Result<(Dataset, Dataset, Dataset)> {
    Ok(usage_indices(ds)?.apply(ds))
}
