//! Dataset-level orchestration behind the command-line tool.

mod commands;
mod config;
mod synth;

pub use commands::{
    aggregate, depth_sweep, featurize_dataset, featurize_dataset_static, persist_sample, read_entries, train_eval,
    train_full, transfer, write_depth_sweep_csv, Aggregate, DepthSweepRow, FeaturizeOutcome, MetricSummary,
    SampleFailure, SeedRun, TrainEvalReport, TransferReport,
};
pub use config::{RunConfig, WORKERS_ENV};
pub use synth::{synth_dataset, synth_sample, SynthParams};
