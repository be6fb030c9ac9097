//! Synthetic attention dumps with a planted class signal.
//!
//! Every layer is causal background noise plus one strong cycle of attention
//! edges. Class 0 keeps the same cycle in every layer, so a 1-cycle survives
//! the whole zigzag. Class 1 draws a fresh cycle per layer, so its loops are
//! short-lived.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{write_dataset_manifest, write_sample, AttentionMatrix, AttentionSample, DatasetEntry};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub samples_per_class: usize,
    pub seq_len: usize,
    pub num_layers: usize,
    pub seed: u64,
    pub model_id: String,
    /// Upper bound of the uniform background weight.
    pub noise: f64,
    pub cycle_weight: (f64, f64),
    pub cycle_len: (usize, usize),
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            samples_per_class: 200,
            seq_len: 20,
            num_layers: 12,
            seed: 7,
            model_id: "synthetic".into(),
            noise: 0.015,
            cycle_weight: (0.25, 0.35),
            cycle_len: (4, 6),
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        if self.seq_len < 6 || self.num_layers < 4 {
            return Err(Error::InvalidParameter(format!(
                "synthetic samples need seq_len >= 6 and num_layers >= 4, got {} and {}",
                self.seq_len, self.num_layers
            )));
        }
        let (lo, hi) = self.cycle_len;
        if lo < 3 || lo > hi || hi > self.seq_len {
            return Err(Error::InvalidParameter(format!(
                "cycle length range {lo}..={hi} must satisfy 3 <= lo <= hi <= seq_len ({})",
                self.seq_len
            )));
        }
        let (wlo, whi) = self.cycle_weight;
        if !(self.noise >= 0.0 && wlo > self.noise && wlo <= whi) {
            return Err(Error::InvalidParameter(
                "cycle weights must exceed the noise level and form a valid range".into(),
            ));
        }
        Ok(())
    }
}

fn random_cycle(rng: &mut ChaCha8Rng, params: &SynthParams) -> Vec<(usize, usize)> {
    let len = rng.random_range(params.cycle_len.0..=params.cycle_len.1);
    let nodes = sample_indices(rng, params.seq_len, len).into_vec();
    (0..len)
        .map(|i| {
            let (a, b) = (nodes[i], nodes[(i + 1) % len]);
            (a.max(b), a.min(b))
        })
        .collect()
}

fn layer_matrix(rng: &mut ChaCha8Rng, params: &SynthParams, cycle: &[(usize, usize)]) -> Result<AttentionMatrix> {
    let t = params.seq_len;
    let mut m = vec![0.0f64; t * t];
    for i in 1..t {
        for j in 0..i {
            m[i * t + j] = rng.random_range(0.0..params.noise);
        }
    }
    for &(row, col) in cycle {
        m[row * t + col] = rng.random_range(params.cycle_weight.0..params.cycle_weight.1);
    }
    let mut data = vec![0.0f32; t * t];
    for i in 0..t {
        let row = &mut m[i * t..(i + 1) * t];
        let off: f64 = row[..i].iter().sum();
        row[i] = (1.0 - off).max(0.05);
        let total: f64 = row.iter().sum();
        for (dst, v) in data[i * t..(i + 1) * t].iter_mut().zip(row.iter()) {
            *dst = (v / total) as f32;
        }
    }
    AttentionMatrix::new(t, data)
}

/// The `index`-th sample of a synthetic dataset. Labels alternate 0, 1, 0, ...
pub fn synth_sample(params: &SynthParams, index: usize) -> Result<AttentionSample> {
    params.validate()?;
    let label = (index % 2) as u8;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);
    let fixed = random_cycle(&mut rng, params);
    let layers = (0..params.num_layers)
        .map(|_| {
            let cycle = if label == 0 {
                fixed.clone()
            } else {
                random_cycle(&mut rng, params)
            };
            layer_matrix(&mut rng, params, &cycle)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(
        AttentionSample::new(format!("synth_{index:05}"), params.model_id.clone(), true, layers)?
            .with_label(Some(label)),
    )
}

/// Writes `2 * samples_per_class` dumps under `out_dir` plus
/// `out_dir/manifest.jsonl`, and returns the manifest path.
pub fn synth_dataset(params: &SynthParams, out_dir: impl AsRef<Path>) -> Result<PathBuf> {
    params.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let total = 2 * params.samples_per_class;
    let entries = (0..total)
        .into_par_iter()
        .map(|i| {
            let sample = synth_sample(params, i)?;
            let name = PathBuf::from(format!("sample_{i:05}"));
            write_sample(out_dir.join(&name), &sample)?;
            Ok(DatasetEntry {
                path: name,
                label: sample.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = out_dir.join("manifest.jsonl");
    write_dataset_manifest(&manifest, &entries)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::{sample_diagram, FeatureConfig};

    fn small(seed: u64) -> SynthParams {
        SynthParams {
            samples_per_class: 1,
            seed,
            ..SynthParams::default()
        }
    }

    fn max_lifetime(sample: &AttentionSample) -> usize {
        let cfg = FeatureConfig::default();
        sample_diagram(sample, &cfg)
            .unwrap()
            .of_dim(1)
            .map(|b| b.lifetime())
            .max()
            .unwrap_or(0)
    }

    #[test]
    fn stable_class_carries_a_long_loop() {
        for seed in 0..20 {
            let p = small(seed);
            let s = synth_sample(&p, 0).unwrap();
            assert_eq!(s.label, Some(0));
            assert!(max_lifetime(&s) >= 2 * p.num_layers - 3, "seed {seed}");
        }
    }

    #[test]
    fn unstable_class_loops_are_short() {
        let short = (0..100)
            .filter(|&seed| max_lifetime(&synth_sample(&small(seed), 1).unwrap()) <= 5)
            .count();
        assert!(short >= 95, "{short}/100 class-1 samples had only short loops");
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let p = SynthParams {
            samples_per_class: 2,
            seq_len: 8,
            num_layers: 4,
            ..SynthParams::default()
        };
        synth_dataset(&p, a.path()).unwrap();
        synth_dataset(&p, b.path()).unwrap();
        for i in 0..4 {
            for f in ["manifest.json", "layer_000.bin", "layer_003.bin"] {
                let rel = format!("sample_{i:05}/{f}");
                assert_eq!(
                    fs::read(a.path().join(&rel)).unwrap(),
                    fs::read(b.path().join(&rel)).unwrap()
                );
            }
        }
        assert_eq!(
            fs::read(a.path().join("manifest.jsonl")).unwrap(),
            fs::read(b.path().join("manifest.jsonl")).unwrap()
        );
    }

    #[test]
    fn rejects_bad_cycle_range() {
        let p = SynthParams {
            seq_len: 5,
            ..SynthParams::default()
        };
        assert!(synth_sample(&p, 0).unwrap_err().is_usage());
        let p = SynthParams {
            num_layers: 3,
            ..SynthParams::default()
        };
        assert!(synth_sample(&p, 0).unwrap_err().is_usage());
    }
}
