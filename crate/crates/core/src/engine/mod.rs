//! Training loop, accuracy metrics and the baseline-vs-augmented runner.

pub mod experiment;
pub mod history;
pub mod leakage;
pub mod metrics;
pub mod train;

pub use experiment::{
    augmented_splits, baseline_splits, corrupt, median, run_experiment, run_seed_sweep, ArmReport, ComparisonReport, ExperimentSetup, Protocol,
    SeedSweep, SplitMode,
};
pub use history::{write_history_csv, HISTORY_HEADER};
pub use leakage::{count_leakage, count_near_duplicate_pairs, LeakageCounts};
pub use metrics::{accuracy, confusion, multiclass_accuracy, BinaryTally, ConfusionMatrix};
pub use train::{evaluate, select_best, train, EpochMetrics, Evaluation, TrainConfig, TrainOutcome};
