use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classify::ForestParams;
use crate::error::{Error, Result};
use crate::vectorize::FeatureConfig;

/// Environment fallback for the worker count.
pub const WORKERS_ENV: &str = "HALLUZIG_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    #[serde(flatten)]
    pub features: FeatureConfig,
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// When nonempty, train/eval runs once per seed and aggregates.
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
    /// Worker threads for sample-level parallelism; 0 means logical cores.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            n_trees: 100,
            max_depth: 10,
            seed: 0,
            seeds: Vec::new(),
            test_fraction: 0.2,
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.features.validate()?;
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be positive".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }

    /// Seeds to run: the explicit list, or the single seed.
    pub fn run_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.seeds.clone()
        }
    }

    pub fn forest(&self, seed: u64) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            seed,
        }
    }

    /// Thread pool sized by `workers` (0 = rayon's default).
    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Invariant(format!("thread pool: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::Scheme;

    #[test]
    fn partial_config_file_fills_defaults() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"top_percent": 20, "scheme": "betti_curve", "n_trees": 7}"#).unwrap();
        assert_eq!(cfg.features.top_percent, 20.0);
        assert_eq!(cfg.features.scheme, Scheme::BettiCurve);
        assert_eq!(cfg.features.min_persistence, 5);
        assert_eq!(cfg.n_trees, 7);
        assert_eq!(cfg.test_fraction, 0.2);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = RunConfig {
            seeds: vec![1, 2, 3],
            features: FeatureConfig {
                dims: vec![0, 1],
                ..FeatureConfig::default()
            },
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.run_seeds(), vec![1, 2, 3]);
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let cfg = RunConfig {
            test_fraction: 1.0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().unwrap_err().is_usage());
        let mut cfg = RunConfig::default();
        cfg.features.top_percent = 0.0;
        assert!(cfg.validate().unwrap_err().is_usage());
    }
}
