//! Declarative experiment configuration.
//!
//! One JSON document fully determines a run. Every section and field has a
//! default, so `{"schema_version": 1}` is a complete config: a synthetic
//! dataset, a stratified 8:1:1 split, the four-variant policy applied after
//! splitting, and the default trainer.

use std::fs;
use std::path::{Path, PathBuf};

use hdalab_core::augment::{AugmentationPolicy, NoiseParams};
use hdalab_core::data::SplitSpec;
use hdalab_core::engine::{ExperimentSetup, Protocol, SplitMode, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub augmentation: AugmentationSection,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub output: OutputSection,
    /// Seeds for a repeated comparison; empty runs `compare` once.
    #[serde(default)]
    pub sweep_seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dataset: DatasetSection::default(),
            split: SplitSection::default(),
            augmentation: AugmentationSection::default(),
            training: TrainConfig::default(),
            output: OutputSection::default(),
            sweep_seeds: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSection {
    /// FER2013 CSV file.
    Fer2013 { path: PathBuf },
    /// Directory of `<emotion>/*.pgm` frames.
    Ckplus { path: PathBuf },
    /// Generated three-class shapes.
    Synthetic {
        #[serde(default = "default_n_per_class")]
        n_per_class: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_n_per_class() -> usize {
    200
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection::Synthetic { n_per_class: default_n_per_class(), seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    #[default]
    Ratio,
    Usage,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub mode: SplitKind,
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { mode: SplitKind::Ratio, train: 0.8, val: 0.1, test: 0.1, seed: 0, stratified: true }
    }
}

impl SplitSection {
    pub fn to_mode(&self) -> SplitMode {
        match self.mode {
            SplitKind::Ratio => SplitMode::Ratio(SplitSpec {
                train_fraction: self.train,
                val_fraction: self.val,
                test_fraction: self.test,
                seed: self.seed,
                stratified: self.stratified,
            }),
            SplitKind::Usage => SplitMode::Usage,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationSection {
    pub include_original: bool,
    pub include_flip: bool,
    pub include_noise: bool,
    pub include_flip_noise: bool,
    pub noise: NoiseParams,
    pub clamp: bool,
    /// Base seed for per-item noise streams.
    pub seed: u64,
    pub protocol: Protocol,
    /// Noise added to every test image in evaluation.
    pub test_noise: Option<NoiseParams>,
    pub test_noise_seed: u64,
}

impl Default for AugmentationSection {
    fn default() -> Self {
        let p = AugmentationPolicy::default();
        Self {
            include_original: p.include_original,
            include_flip: p.include_flip,
            include_noise: p.include_noise,
            include_flip_noise: p.include_flip_noise,
            noise: p.noise,
            clamp: p.clamp,
            seed: p.base_seed,
            protocol: Protocol::default(),
            test_noise: None,
            test_noise_seed: 0,
        }
    }
}

impl AugmentationSection {
    pub fn policy(&self) -> AugmentationPolicy {
        AugmentationPolicy {
            include_original: self.include_original,
            include_flip: self.include_flip,
            include_noise: self.include_noise,
            include_flip_noise: self.include_flip_noise,
            noise: self.noise,
            clamp: self.clamp,
            base_seed: self.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub summary: String,
    pub augmented: String,
    pub provenance: String,
    pub checkpoint: String,
    pub metrics: String,
    pub baseline_metrics: String,
    pub hda_metrics: String,
    pub report: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            summary: "summary.json".into(),
            augmented: "augmented.csv".into(),
            provenance: "provenance.csv".into(),
            checkpoint: "model.ckpt".into(),
            metrics: "metrics.csv".into(),
            baseline_metrics: "baseline_metrics.csv".into(),
            hda_metrics: "hda_metrics.csv".into(),
            report: "report.json".into(),
        }
    }
}

impl OutputSection {
    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    fn file_names(&self) -> [(&'static str, &str); 8] {
        [
            ("summary", &self.summary),
            ("augmented", &self.augmented),
            ("provenance", &self.provenance),
            ("checkpoint", &self.checkpoint),
            ("metrics", &self.metrics),
            ("baseline_metrics", &self.baseline_metrics),
            ("hda_metrics", &self.hda_metrics),
            ("report", &self.report),
        ]
    }
}

/// Scalar overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    /// Replaces `training.seed` and `augmentation.seed`.
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads and parses a config file. Missing or malformed files are
    /// configuration errors.
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::config(format!("invalid config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.training.seed = seed;
            self.augmentation.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
    }

    pub fn setup(&self) -> ExperimentSetup {
        ExperimentSetup {
            split: self.split.to_mode(),
            protocol: self.augmentation.protocol,
            test_noise: self.augmentation.test_noise,
            test_noise_seed: self.augmentation.test_noise_seed,
            ..ExperimentSetup::default()
        }
    }

    /// Checks every invariant a command relies on, including that input
    /// paths exist. Nothing is written by any command until this passes.
    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: String| Err(Failure::config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        match &self.dataset {
            DatasetSection::Fer2013 { path } if !path.is_file() => {
                return bad(format!("dataset file {} does not exist", path.display()))
            }
            DatasetSection::Ckplus { path } if !path.is_dir() => {
                return bad(format!("dataset directory {} does not exist", path.display()))
            }
            DatasetSection::Synthetic { n_per_class: 0, .. } => {
                return bad("synthetic n_per_class must be at least 1".into())
            }
            _ => {}
        }
        if let SplitMode::Ratio(spec) = self.split.to_mode() {
            spec.validate().map_err(Failure::config_from)?;
        }
        self.augmentation.policy().validate().map_err(Failure::config_from)?;
        if let Some(n) = &self.augmentation.test_noise {
            n.validate().map_err(|e| Failure::config(format!("test_noise: {e}")))?;
        }
        self.training.validate().map_err(Failure::config_from)?;
        if self.output.dir.as_os_str().is_empty() {
            return bad("output.dir is empty".into());
        }
        let names = self.output.file_names();
        for (i, (field, name)) in names.iter().enumerate() {
            if name.is_empty() || Path::new(name).components().count() != 1 {
                return bad(format!("output.{field} must be a plain file name, got '{name}'"));
            }
            if let Some((other, _)) = names[..i].iter().find(|(_, n)| n == name) {
                return bad(format!("output.{field} and output.{other} are both '{name}'"));
            }
        }
        Ok(())
    }
}
