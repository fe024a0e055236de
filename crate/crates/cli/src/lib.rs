//! Command-line driver: `summarize`, `augment`, `train` and `compare`, all
//! driven by one JSON experiment config.
//!
//! Exit codes: 0 on success, 1 when a validated run fails, 2 for usage or
//! configuration errors (including missing input files).

pub mod commands;
pub mod config;
pub mod failure;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_augment, cmd_compare, cmd_summarize, cmd_train, load_dataset};
pub use config::{DatasetSection, ExperimentConfig, Overrides, SCHEMA_VERSION};
pub use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "hdalab", version, about = "Hybrid data augmentation experiments for facial-expression CNNs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the training and augmentation seeds.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct DatasetFlags {
    /// Summarize a FER2013 CSV file.
    #[arg(long, value_name = "PATH")]
    pub fer2013: Option<PathBuf>,
    /// Summarize a CK+ directory of `<emotion>/*.pgm` frames.
    #[arg(long, value_name = "DIR")]
    pub ckplus: Option<PathBuf>,
    /// Summarize a synthetic dataset with this many items per class.
    #[arg(long, value_name = "N")]
    pub synthetic: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print totals, per-class counts and image shape; write a JSON summary.
    Summarize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dataset: DatasetFlags,
    },
    /// Write the augmented dataset as FER2013 CSV plus a provenance file.
    Augment {
        #[command(flatten)]
        common: Common,
    },
    /// Train one model; write the best-epoch checkpoint, metrics and report.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Run the baseline and augmented arms; write both histories and a report.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides { seed: common.seed, out: common.out.clone() });
    Ok(cfg)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<(), Failure> {
    let say = |out: &mut dyn Write, line: String| -> Result<(), Failure> {
        writeln!(out, "{line}").map_err(|e| Failure::Runtime(e.into()))
    };
    let list = |out: &mut dyn Write, written: &[PathBuf]| -> Result<(), Failure> {
        for p in written {
            say(out, format!("wrote {}", p.display()))?;
        }
        Ok(())
    };
    match cli.command {
        Command::Summarize { common, dataset } => {
            let mut cfg = resolve(&common)?;
            if let Some(path) = dataset.fer2013 {
                cfg.dataset = DatasetSection::Fer2013 { path };
            } else if let Some(path) = dataset.ckplus {
                cfg.dataset = DatasetSection::Ckplus { path };
            } else if let Some(n_per_class) = dataset.synthetic {
                let seed = match cfg.dataset {
                    DatasetSection::Synthetic { seed, .. } => seed,
                    _ => 0,
                };
                cfg.dataset = DatasetSection::Synthetic { n_per_class, seed };
            }
            let (_, written) = cmd_summarize(&cfg, stdout)?;
            list(stdout, &written)
        }
        Command::Augment { common } => {
            let (rows, written) = cmd_augment(&resolve(&common)?)?;
            say(stdout, format!("augmented items: {rows}"))?;
            list(stdout, &written)
        }
        Command::Train { common } => {
            let (report, written) = cmd_train(&resolve(&common)?)?;
            say(
                stdout,
                format!(
                    "{}: best epoch {} (val acc {:.4}), test acc {:.4}",
                    report.model,
                    report.best_epoch + 1,
                    report.best_val_acc,
                    report.test_acc
                ),
            )?;
            list(stdout, &written)
        }
        Command::Compare { common } => {
            let (report, written) = cmd_compare(&resolve(&common)?)?;
            for run in &report.runs {
                say(
                    stdout,
                    format!(
                        "seed {}: baseline test acc {:.4}, hda test acc {:.4}{}",
                        run.train_seed,
                        run.baseline.test_acc,
                        run.hda.test_acc,
                        if run.arms_identical { " (arms identical)" } else { "" }
                    ),
                )?;
            }
            if let Some(s) = &report.sweep {
                say(stdout, format!("median: baseline {:.4}, hda {:.4}", s.baseline_median, s.hda_median))?;
            }
            list(stdout, &written)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(stderr, "hdalab: {f}");
            f.exit_code()
        }
    }
}
