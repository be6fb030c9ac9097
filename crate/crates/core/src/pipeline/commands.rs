use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::classify::{evaluate, split_train_test, EvalReport, ForestModel};
use crate::error::{Error, Result};
use crate::ingest::{load_sample, read_dataset_manifest, AttentionSample, DatasetEntry};
use crate::vectorize::{
    featurize_sample, featurize_sample_static, sample_diagram, FeatureConfig, FeatureRow, FeatureTable,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub path: PathBuf,
    pub error: String,
}

/// Result of featurizing a manifest: successful rows in manifest order, plus
/// one failure record per sample that could not be processed.
#[derive(Debug)]
pub struct FeaturizeOutcome {
    pub table: FeatureTable,
    pub failures: Vec<SampleFailure>,
    first_error: Option<Error>,
}

impl FeaturizeOutcome {
    /// Fails only when no sample succeeded.
    pub fn require_rows(self) -> Result<Self> {
        match (self.table.is_empty(), self.first_error) {
            (true, Some(err)) => Err(err),
            (true, None) => Err(Error::InvalidParameter("dataset manifest lists no samples".into())),
            (false, first_error) => Ok(Self { first_error, ..self }),
        }
    }

    /// Writes the failure log as JSON lines.
    pub fn write_error_log(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = Vec::new();
        for failure in &self.failures {
            serde_json::to_writer(&mut out, failure).map_err(|e| Error::Invariant(e.to_string()))?;
            out.push(b'\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

fn featurize_with<F>(entries: &[DatasetEntry], config: &RunConfig, scheme: &str, f: F) -> Result<FeaturizeOutcome>
where
    F: Fn(&AttentionSample, &FeatureConfig) -> Result<Vec<f64>> + Sync,
{
    config.validate()?;
    let results: Vec<Result<FeatureRow>> = config.pool()?.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let sample = load_sample(&entry.path)?;
                let values = f(&sample, &config.features)?;
                Ok(FeatureRow {
                    label: entry.label.or(sample.label),
                    sample_id: sample.sample_id,
                    scheme: scheme.to_string(),
                    values,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut first_error = None;
    for (entry, result) in entries.iter().zip(results) {
        match result {
            Ok(row) => rows.push(row),
            Err(err) => {
                failures.push(SampleFailure {
                    path: entry.path.clone(),
                    error: err.to_string(),
                });
                first_error.get_or_insert(err);
            }
        }
    }
    Ok(FeaturizeOutcome {
        table: FeatureTable::new(rows).quantized(),
        failures,
        first_error,
    })
}

/// Zigzag features for every sample of a dataset manifest, rounded to the
/// precision the CSV table stores.
pub fn featurize_dataset(entries: &[DatasetEntry], config: &RunConfig) -> Result<FeaturizeOutcome> {
    featurize_with(entries, config, config.features.scheme.as_str(), featurize_sample)
}

/// Static-baseline features, same conventions as [`featurize_dataset`].
pub fn featurize_dataset_static(entries: &[DatasetEntry], config: &RunConfig) -> Result<FeaturizeOutcome> {
    let scheme = format!("static_{}", config.features.scheme.as_str());
    featurize_with(entries, config, &scheme, featurize_sample_static)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub n_train: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub auroc: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub tpr_at_5_fpr: f64,
}

/// Mean and sample standard deviation over seeds, plus the best run by AUROC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub mean: MetricSummary,
    pub std: MetricSummary,
    pub best_seed: u64,
    pub best: EvalReport,
}

pub fn aggregate(runs: &[SeedRun]) -> Option<Aggregate> {
    let first = runs.first()?;
    let n = runs.len() as f64;
    let pick = |f: fn(&EvalReport) -> f64| -> (f64, f64) {
        let mean = runs.iter().map(|r| f(&r.report)).sum::<f64>() / n;
        let var = if runs.len() > 1 {
            runs.iter().map(|r| (f(&r.report) - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (mean, var.sqrt())
    };
    let (auroc, accuracy, f1, tpr) = (
        pick(|r| r.auroc),
        pick(|r| r.accuracy),
        pick(|r| r.f1),
        pick(|r| r.tpr_at_5_fpr),
    );
    let best = runs.iter().fold(
        first,
        |best, r| if r.report.auroc > best.report.auroc { r } else { best },
    );
    Some(Aggregate {
        runs: runs.len(),
        mean: MetricSummary {
            auroc: auroc.0,
            accuracy: accuracy.0,
            f1: f1.0,
            tpr_at_5_fpr: tpr.0,
        },
        std: MetricSummary {
            auroc: auroc.1,
            accuracy: accuracy.1,
            f1: f1.1,
            tpr_at_5_fpr: tpr.1,
        },
        best_seed: best.seed,
        best: best.report.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainEvalReport {
    pub config: RunConfig,
    pub n_samples: usize,
    pub feature_dim: usize,
    pub runs: Vec<SeedRun>,
    pub aggregate: Aggregate,
}

fn check_width(table: &FeatureTable) -> Result<usize> {
    let width = table.width()?;
    if width == 0 {
        return Err(Error::InvalidParameter("feature table has no feature columns".into()));
    }
    Ok(width)
}

/// Stratified split, train, evaluate; once per configured seed.
pub fn train_eval(table: &FeatureTable, config: &RunConfig) -> Result<TrainEvalReport> {
    config.validate()?;
    let width = check_width(table)?;
    let labels = table.labels()?;
    let features = table.features();
    let mut runs = Vec::new();
    for seed in config.run_seeds() {
        let (train_idx, test_idx) = split_train_test(&labels, config.test_fraction, seed)?;
        let gather = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
            (
                idx.iter().map(|&i| features[i].clone()).collect(),
                idx.iter().map(|&i| labels[i]).collect(),
            )
        };
        let (x_train, y_train) = gather(&train_idx);
        let (x_test, y_test) = gather(&test_idx);
        let model = ForestModel::train(&x_train, &y_train, config.forest(seed))?;
        let scores = model.predict_proba(&x_test)?;
        runs.push(SeedRun {
            seed,
            n_train: train_idx.len(),
            report: evaluate(&scores, &y_test)?,
        });
    }
    Ok(TrainEvalReport {
        config: config.clone(),
        n_samples: table.len(),
        feature_dim: width,
        aggregate: aggregate(&runs).expect("at least one seed"),
        runs,
    })
}

/// Fits a model on a whole table with the first configured seed.
pub fn train_full(table: &FeatureTable, config: &RunConfig) -> Result<ForestModel> {
    config.validate()?;
    check_width(table)?;
    let seed = config.run_seeds()[0];
    ForestModel::train(&table.features(), &table.labels()?, config.forest(seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub config: RunConfig,
    pub feature_dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub runs: Vec<SeedRun>,
    pub aggregate: Aggregate,
}

/// Fits on all of `train` and evaluates on all of `test`.
pub fn transfer(train: &FeatureTable, test: &FeatureTable, config: &RunConfig) -> Result<TransferReport> {
    config.validate()?;
    let (wa, wb) = (check_width(train)?, check_width(test)?);
    if wa != wb {
        return Err(Error::TransferIncompatible { train: wa, test: wb });
    }
    let (x_train, y_train) = (train.features(), train.labels()?);
    let (x_test, y_test) = (test.features(), test.labels()?);
    let mut runs = Vec::new();
    for seed in config.run_seeds() {
        let model = ForestModel::train(&x_train, &y_train, config.forest(seed))?;
        let scores = model.predict_proba(&x_test)?;
        runs.push(SeedRun {
            seed,
            n_train: train.len(),
            report: evaluate(&scores, &y_test)?,
        });
    }
    Ok(TransferReport {
        config: config.clone(),
        feature_dim: wa,
        n_train: train.len(),
        n_test: test.len(),
        aggregate: aggregate(&runs).expect("at least one seed"),
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSweepRow {
    pub fraction: f64,
    pub failures: usize,
    pub report: TrainEvalReport,
}

/// Re-featurizes and re-evaluates the dataset at each depth fraction.
pub fn depth_sweep(entries: &[DatasetEntry], config: &RunConfig, fractions: &[f64]) -> Result<Vec<DepthSweepRow>> {
    if fractions.is_empty() {
        return Err(Error::InvalidParameter(
            "depth sweep needs at least one fraction".into(),
        ));
    }
    for &f in fractions {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidParameter(format!("depth fraction {f} outside (0, 1]")));
        }
    }
    fractions
        .iter()
        .map(|&fraction| {
            let mut cfg = config.clone();
            cfg.features.depth_fraction = fraction;
            let outcome = featurize_dataset(entries, &cfg)?.require_rows()?;
            Ok(DepthSweepRow {
                fraction,
                failures: outcome.failures.len(),
                report: train_eval(&outcome.table, &cfg)?,
            })
        })
        .collect()
}

/// Plot-ready CSV: one row per fraction with the best run's metrics and the
/// mean and standard deviation over seeds.
pub fn write_depth_sweep_csv(rows: &[DepthSweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Invariant(format!("csv: {e}"));
    w.write_record([
        "fraction",
        "auroc",
        "accuracy",
        "f1",
        "tpr_at_5_fpr",
        "n_test",
        "auroc_mean",
        "auroc_std",
        "f1_mean",
        "f1_std",
    ])
    .map_err(csv_err)?;
    for row in rows {
        let best = &row.report.aggregate.best;
        let agg = &row.report.aggregate;
        let fmt = crate::vectorize::format_sig9;
        w.write_record([
            fmt(row.fraction),
            fmt(best.auroc),
            fmt(best.accuracy),
            fmt(best.f1),
            fmt(best.tpr_at_5_fpr),
            best.n_test.to_string(),
            fmt(agg.mean.auroc),
            fmt(agg.std.auroc),
            fmt(agg.mean.f1),
            fmt(agg.std.f1),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Invariant(format!("csv flush: {e}")))
}

/// Raw zigzag barcode of one sample as JSON lines.
pub fn persist_sample(dir: impl AsRef<Path>, config: &FeatureConfig, out: impl Write) -> Result<()> {
    config.validate()?;
    let sample = load_sample(dir)?;
    let diagram = sample_diagram(&sample, config)?;
    diagram.write_jsonl(&sample.sample_id, out)
}

/// Reads a manifest and fails early on an empty one.
pub fn read_entries(manifest: impl AsRef<Path>) -> Result<Vec<DatasetEntry>> {
    let entries = read_dataset_manifest(manifest.as_ref())?;
    if entries.is_empty() {
        return Err(Error::Parse {
            what: manifest.as_ref().display().to_string(),
            reason: "dataset manifest lists no samples".into(),
        });
    }
    Ok(entries)
}
