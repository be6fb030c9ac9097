use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use halluzig::ingest::read_dataset_manifest;
use halluzig::pipeline::{
    depth_sweep, featurize_dataset, featurize_dataset_static, persist_sample, read_entries, synth_dataset, train_eval,
    train_full, transfer, write_depth_sweep_csv, FeaturizeOutcome, RunConfig, SynthParams, WORKERS_ENV,
};
use halluzig::vectorize::{FeatureTable, Scheme};
use halluzig::{Error, Result};

#[derive(Args)]
struct Shared {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    top_percent: Option<f64>,
    #[arg(long, global = true)]
    min_persistence: Option<usize>,
    /// Homology dimensions, comma separated (0, 1).
    #[arg(long, global = true, value_delimiter = ',')]
    dims: Option<Vec<u8>>,
    /// pers_img, pers_entropy or betti_curve.
    #[arg(long, global = true)]
    scheme: Option<Scheme>,
    #[arg(long, global = true)]
    depth_fraction: Option<f64>,
    #[arg(long, global = true)]
    n_trees: Option<usize>,
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run once per seed and aggregate, e.g. 1,2,3.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long, global = true)]
    test_fraction: Option<f64>,
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
}

impl Shared {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        let f = &mut cfg.features;
        if let Some(v) = self.top_percent {
            f.top_percent = v;
        }
        if let Some(v) = self.min_persistence {
            f.min_persistence = v;
        }
        if let Some(v) = &self.dims {
            f.dims = v.clone();
        }
        if let Some(v) = self.scheme {
            f.scheme = v;
        }
        if let Some(v) = self.depth_fraction {
            f.depth_fraction = v;
        }
        if let Some(v) = self.n_trees {
            cfg.n_trees = v;
        }
        if let Some(v) = self.max_depth {
            cfg.max_depth = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Feature table (CSV) for every sample of a dataset manifest.
    Featurize {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Per-sample failure log; defaults to `<out>.errors.jsonl`.
        #[arg(long)]
        errors: Option<PathBuf>,
    },
    /// Stratified split, random forest, evaluation report.
    TrainEval {
        features: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Save a model fitted on the whole table.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Fit on one feature table, evaluate on another.
    Transfer {
        train: PathBuf,
        test: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Metrics as a function of the fraction of layers used.
    DepthSweep {
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.3,0.5,0.7,1.0")]
        fractions: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Synthetic labeled attention dumps; `--seed` defaults to 7 here.
    Synth {
        #[arg(long, default_value_t = 200)]
        n_per_class: usize,
        #[arg(long = "seq-len", default_value_t = 20)]
        seq_len: usize,
        #[arg(long, default_value_t = 12)]
        layers: usize,
        #[arg(long, default_value = "synthetic")]
        model_id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-layer static persistence baseline, evaluated like train-eval.
    StaticBaseline {
        manifest: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        features_out: Option<PathBuf>,
    },
    /// Raw zigzag barcode as JSON lines, for one sample directory or a whole manifest.
    Persist {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Parser)]
#[command(
    name = "halluzig",
    version,
    about = "Zigzag persistence of attention graphs for hallucination detection"
)]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

fn write_json(value: &impl Serialize, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Invariant(e.to_string()))?;
    println!("{text}");
    if let Some(path) = path {
        fs::write(path, format!("{text}\n")).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn report_failures(outcome: &FeaturizeOutcome) {
    for failure in &outcome.failures {
        eprintln!("skipped {}: {}", failure.path.display(), failure.error);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Featurize { manifest, out, errors } => {
            let cfg = cli.shared.resolve()?;
            let entries = read_entries(&manifest)?;
            let outcome = featurize_dataset(&entries, &cfg)?;
            report_failures(&outcome);
            let log = errors.unwrap_or_else(|| {
                let mut name = out.clone().into_os_string();
                name.push(".errors.jsonl");
                PathBuf::from(name)
            });
            outcome.write_error_log(&log)?;
            let outcome = outcome.require_rows()?;
            outcome.table.write_csv(&out)?;
            eprintln!(
                "wrote {} row(s) to {}, {} failure(s)",
                outcome.table.len(),
                out.display(),
                outcome.failures.len()
            );
        }
        Command::TrainEval {
            features,
            report,
            model_out,
        } => {
            let cfg = cli.shared.resolve()?;
            let table = FeatureTable::read_csv(&features)?;
            let result = train_eval(&table, &cfg)?;
            if let Some(path) = model_out {
                train_full(&table, &cfg)?.save(path)?;
            }
            write_json(&result, report.as_deref())?;
        }
        Command::Transfer { train, test, report } => {
            let cfg = cli.shared.resolve()?;
            let a = FeatureTable::read_csv(&train)?;
            let b = FeatureTable::read_csv(&test)?;
            write_json(&transfer(&a, &b, &cfg)?, report.as_deref())?;
        }
        Command::DepthSweep {
            manifest,
            fractions,
            out,
            report,
        } => {
            let cfg = cli.shared.resolve()?;
            let entries = read_entries(&manifest)?;
            let rows = depth_sweep(&entries, &cfg, &fractions)?;
            let mut w = create(&out)?;
            write_depth_sweep_csv(&rows, &mut w)?;
            w.flush().map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            if let Some(path) = report {
                write_json(&rows, Some(&path))?;
            }
        }
        Command::Synth {
            n_per_class,
            seq_len,
            layers,
            model_id,
            out,
        } => {
            let params = SynthParams {
                samples_per_class: n_per_class,
                seq_len,
                num_layers: layers,
                seed: cli.shared.seed.unwrap_or(SynthParams::default().seed),
                model_id,
                ..SynthParams::default()
            };
            let manifest = synth_dataset(&params, &out)?;
            eprintln!("wrote {} samples, manifest {}", 2 * n_per_class, manifest.display());
        }
        Command::StaticBaseline {
            manifest,
            report,
            features_out,
        } => {
            let cfg = cli.shared.resolve()?;
            let entries = read_entries(&manifest)?;
            let outcome = featurize_dataset_static(&entries, &cfg)?;
            report_failures(&outcome);
            let outcome = outcome.require_rows()?;
            if let Some(path) = features_out {
                outcome.table.write_csv(path)?;
            }
            write_json(&train_eval(&outcome.table, &cfg)?, report.as_deref())?;
        }
        Command::Persist { input, out } => {
            let cfg = cli.shared.resolve()?;
            let dirs: Vec<PathBuf> = if input.is_dir() {
                vec![input]
            } else {
                read_dataset_manifest(&input)?.into_iter().map(|e| e.path).collect()
            };
            let mut sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(create(path)?),
                None => Box::new(BufWriter::new(io::stdout().lock())),
            };
            for dir in dirs {
                persist_sample(&dir, &cfg.features, &mut sink)?;
            }
            sink.flush().map_err(|e| Error::Io {
                path: out.unwrap_or_else(|| PathBuf::from("<stdout>")),
                source: e,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_usage() {
                2
            } else if err.is_invariant() {
                4
            } else {
                3
            })
        }
    }
}
