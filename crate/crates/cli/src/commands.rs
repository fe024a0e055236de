//! The four subcommands. Each validates the full config, computes
//! everything, and only then writes its files under `output.dir`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hdalab_core::augment::{apply_policy_with_provenance, Provenance};
use hdalab_core::data::{
    generate_synthetic, load_ckplus_dir, parse_fer2013_csv, summarize, write_fer2013_csv, Dataset, DatasetSummary,
    NUM_CLASSES,
};
use hdalab_core::engine::{
    augmented_splits, corrupt, evaluate, run_experiment, run_seed_sweep, train, write_history_csv, ComparisonReport,
    EpochMetrics, SeedSweep,
};
use hdalab_core::model::{build_model_for, write_checkpoint, Shape3};
use serde::Serialize;

use crate::config::{DatasetSection, ExperimentConfig, SCHEMA_VERSION};
use crate::failure::Failure;

pub fn load_dataset(section: &DatasetSection) -> Result<Dataset, Failure> {
    let ds = match section {
        DatasetSection::Fer2013 { path } => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            parse_fer2013_csv(std::io::BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?
        }
        DatasetSection::Ckplus { path } => {
            load_ckplus_dir(path).with_context(|| format!("reading {}", path.display()))?
        }
        DatasetSection::Synthetic { n_per_class, seed } => generate_synthetic(*n_per_class, *seed)?,
    };
    if ds.is_empty() {
        return Err(anyhow::anyhow!("dataset is empty").into());
    }
    Ok(ds)
}

/// Files produced by a command, in the order they were written.
pub type Written = Vec<PathBuf>;

fn write_all(dir: &Path, files: Vec<(String, Vec<u8>)>) -> Result<Written, Failure> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).context("serializing report")?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn history_bytes(history: &[EpochMetrics]) -> Result<Vec<u8>, Failure> {
    let mut bytes = Vec::new();
    write_history_csv(history, &mut bytes).context("formatting metrics")?;
    Ok(bytes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryDoc {
    pub schema_version: u32,
    pub dataset: DatasetSection,
    #[serde(flatten)]
    pub summary: DatasetSummary,
    /// Counts per FER2013 usage tag; untagged items under `"none"`.
    pub per_usage: BTreeMap<String, usize>,
}

pub fn cmd_summarize(cfg: &ExperimentConfig, out: &mut dyn Write) -> Result<(SummaryDoc, Written), Failure> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    let mut per_usage = BTreeMap::new();
    for s in ds.items() {
        let key = s.usage.map_or("none", |u| u.as_str());
        *per_usage.entry(key.to_string()).or_insert(0) += 1;
    }
    let doc = SummaryDoc {
        schema_version: SCHEMA_VERSION,
        dataset: cfg.dataset.clone(),
        summary: summarize(&ds),
        per_usage,
    };

    let s = &doc.summary;
    writeln!(out, "total: {}", s.total).context("writing summary")?;
    if let Some((w, h)) = s.image_shape {
        writeln!(out, "image shape: {w}x{h}").context("writing summary")?;
    }
    for (label, n) in &s.per_class {
        writeln!(out, "{:>2} {:<9} {n}", label.code(), label.name()).context("writing summary")?;
    }
    for (usage, n) in &doc.per_usage {
        writeln!(out, "usage {usage}: {n}").context("writing summary")?;
    }

    let written = write_all(&cfg.output.dir, vec![(cfg.output.summary.clone(), json_bytes(&doc)?)])?;
    Ok((doc, written))
}

/// Expands the whole dataset with the configured policy and writes it as
/// FER2013 CSV, plus a `row,source_index,variant,seed` provenance sidecar.
pub fn cmd_augment(cfg: &ExperimentConfig) -> Result<(usize, Written), Failure> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    let (augmented, provenance) = apply_policy_with_provenance(&ds, &cfg.augmentation.policy())?;

    let mut csv = Vec::new();
    write_fer2013_csv(&augmented, &mut csv).context("serializing augmented dataset")?;
    let written = write_all(
        &cfg.output.dir,
        vec![
            (cfg.output.augmented.clone(), csv),
            (cfg.output.provenance.clone(), provenance_bytes(&provenance)),
        ],
    )?;
    Ok((augmented.len(), written))
}

fn provenance_bytes(rows: &[Provenance]) -> Vec<u8> {
    let mut s = String::from("row,source_index,variant,seed\n");
    for (i, p) in rows.iter().enumerate() {
        let seed = p.seed.map(|v| v.to_string()).unwrap_or_default();
        s += &format!("{i},{},{},{seed}\n", p.source_index, p.variant.name());
    }
    s.into_bytes()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: ExperimentConfig,
    pub model: String,
    pub param_count: usize,
    pub train_size: usize,
    pub val_size: usize,
    pub test_size: usize,
    pub optimizer_steps: u64,
    /// 0-based index into `history`.
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_acc: f64,
    pub test_loss: f64,
    pub test_per_class_acc: [f64; NUM_CLASSES],
    pub test_confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
    pub history: Vec<EpochMetrics>,
}

/// Trains on the (augmented) training split and keeps the parameters of the
/// best validation epoch.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<(TrainReport, Written), Failure> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    let setup = cfg.setup();
    let (train_set, val_set, test_set) =
        augmented_splits(&ds, &cfg.augmentation.policy(), &setup.split, setup.protocol)?;
    for (name, part) in [("training", &train_set), ("validation", &val_set), ("test", &test_set)] {
        if part.is_empty() {
            return Err(Failure::config(format!("{name} split is empty")));
        }
    }
    let test_set = match &setup.test_noise {
        Some(n) => corrupt(&test_set, n, setup.test_noise_seed)?,
        None => test_set,
    };
    let (width, height) = train_set.image_shape().expect("nonempty training split");
    let spec = build_model_for(cfg.training.model_name, Shape3::new(1, height, width), NUM_CLASSES)
        .map_err(Failure::config_from)?;

    let outcome = train(&spec, &train_set, &val_set, &cfg.training)?;
    let test = evaluate(&spec, &outcome.best_params, &test_set)?;

    let report = TrainReport {
        schema_version: SCHEMA_VERSION,
        command: "train",
        config: cfg.clone(),
        model: spec.name.to_string(),
        param_count: spec.param_count(),
        train_size: train_set.len(),
        val_size: val_set.len(),
        test_size: test_set.len(),
        optimizer_steps: outcome.optimizer_steps,
        best_epoch: outcome.best_epoch,
        best_val_acc: outcome.history[outcome.best_epoch].val_acc,
        test_acc: test.accuracy,
        test_loss: test.loss,
        test_per_class_acc: test.confusion.per_class_accuracy()?,
        test_confusion: test.confusion.counts,
        history: outcome.history.clone(),
    };

    let mut ckpt = Vec::new();
    write_checkpoint(&spec, &outcome.best_params, &mut ckpt).context("serializing checkpoint")?;
    let written = write_all(
        &cfg.output.dir,
        vec![
            (cfg.output.checkpoint.clone(), ckpt),
            (cfg.output.metrics.clone(), history_bytes(&outcome.history)?),
            (cfg.output.report.clone(), json_bytes(&report)?),
        ],
    )?;
    Ok((report, written))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub config: ExperimentConfig,
    /// Present when `sweep_seeds` is nonempty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SeedSweep>,
    pub runs: Vec<ComparisonReport>,
}

/// Runs the baseline and augmented arms (once, or once per sweep seed) and
/// writes both metric histories and the combined report.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<(CompareReport, Written), Failure> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    let policy = cfg.augmentation.policy();
    let setup = cfg.setup();

    let (sweep, runs) = if cfg.sweep_seeds.is_empty() {
        (None, vec![run_experiment(&ds, &policy, &cfg.training, &setup)?])
    } else {
        let (s, r) = run_seed_sweep(&ds, &policy, &cfg.training, &setup, &cfg.sweep_seeds)?;
        (Some(s), r)
    };

    let mut files = Vec::new();
    for run in &runs {
        let tag = sweep.as_ref().map(|_| run.train_seed);
        files.push((seeded_name(&cfg.output.baseline_metrics, tag), history_bytes(&run.baseline.history)?));
        files.push((seeded_name(&cfg.output.hda_metrics, tag), history_bytes(&run.hda.history)?));
    }
    let report = CompareReport {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        config: cfg.clone(),
        sweep,
        runs,
    };
    files.push((cfg.output.report.clone(), json_bytes(&report)?));
    let written = write_all(&cfg.output.dir, files)?;
    Ok((report, written))
}

/// `metrics.csv` → `metrics_seed7.csv` when a seed is given.
fn seeded_name(name: &str, seed: Option<u64>) -> String {
    match (seed, name.rsplit_once('.')) {
        (None, _) => name.to_string(),
        (Some(s), Some((stem, ext))) => format!("{stem}_seed{s}.{ext}"),
        (Some(s), None) => format!("{name}_seed{s}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_names() {
        assert_eq!(seeded_name("a.csv", None), "a.csv");
        assert_eq!(seeded_name("a.csv", Some(3)), "a_seed3.csv");
        assert_eq!(seeded_name("plain", Some(3)), "plain_seed3");
    }

    #[test]
    fn provenance_layout() {
        use hdalab_core::augment::Variant;
        let rows = [
            Provenance { source_index: 0, variant: Variant::Original, seed: None },
            Provenance { source_index: 0, variant: Variant::Noise, seed: Some(42) },
        ];
        assert_eq!(
            String::from_utf8(provenance_bytes(&rows)).unwrap(),
            "row,source_index,variant,seed\n0,0,original,\n1,0,noise,42\n"
        );
    }
}
