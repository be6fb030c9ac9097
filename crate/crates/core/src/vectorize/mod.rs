//! Turning barcodes into fixed-length feature vectors.

mod image;
mod table;

pub use image::{persistence_image, persistence_image_with_normalizer, ImageGrid};
pub use table::{format_sig9, quantize, FeatureRow, FeatureTable};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{build_graph_sequence, AttentionSample};
use crate::zigzag::{build_zigzag, compute_dims, static_persistence, Backend, PersistenceDiagram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    PersImg,
    PersEntropy,
    BettiCurve,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::PersImg => "pers_img",
            Scheme::PersEntropy => "pers_entropy",
            Scheme::BettiCurve => "betti_curve",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pers_img" | "pers-img" => Ok(Scheme::PersImg),
            "pers_entropy" | "pers-entropy" => Ok(Scheme::PersEntropy),
            "betti_curve" | "betti-curve" => Ok(Scheme::BettiCurve),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Everything that determines a sample's feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub top_percent: f64,
    pub depth_fraction: f64,
    pub min_persistence: usize,
    pub scheme: Scheme,
    pub dims: Vec<u8>,
    pub image_resolution: usize,
    pub sigma: f64,
    pub curve_resolution: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            top_percent: 10.0,
            depth_fraction: 1.0,
            min_persistence: 5,
            scheme: Scheme::PersImg,
            dims: vec![1],
            image_resolution: 32,
            sigma: 1.0 / 32.0,
            curve_resolution: 32,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.top_percent > 0.0 && self.top_percent <= 100.0) {
            return bad(format!("top_percent must lie in (0, 100], got {}", self.top_percent));
        }
        if !(self.depth_fraction > 0.0 && self.depth_fraction <= 1.0) {
            return bad(format!(
                "depth_fraction must lie in (0, 1], got {}",
                self.depth_fraction
            ));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d > 1) {
            return bad(format!(
                "dims must be a nonempty subset of {{0, 1}}, got {:?}",
                self.dims
            ));
        }
        if self.image_resolution == 0 || self.curve_resolution == 0 {
            return bad("resolutions must be positive".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }

    fn sorted_dims(&self) -> Vec<u8> {
        let mut dims = self.dims.clone();
        dims.sort_unstable();
        dims.dedup();
        dims
    }

    /// Width of the vector produced for one diagram.
    pub fn width_per_diagram(&self) -> usize {
        let per_dim = match self.scheme {
            Scheme::PersImg => self.image_resolution * self.image_resolution,
            Scheme::PersEntropy => 1,
            Scheme::BettiCurve => self.curve_resolution,
        };
        per_dim * self.sorted_dims().len()
    }
}

/// Drops bars alive for fewer than `min_persistence` snapshots.
pub fn filter_bars(diagram: &PersistenceDiagram, min_persistence: usize) -> PersistenceDiagram {
    diagram.retain(|bar| bar.lifetime() >= min_persistence)
}

/// Bars with endpoints rescaled to `[0, 1]` over the diagram's index range.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDiagram {
    pub points: Vec<(f64, f64)>,
}

pub fn normalize_diagram(diagram: &PersistenceDiagram) -> NormalizedDiagram {
    let first = diagram.first_index() as f64;
    let span = diagram.max_index() as f64 - first;
    let scale = |x: usize| if span > 0.0 { (x as f64 - first) / span } else { 0.0 };
    NormalizedDiagram {
        points: diagram
            .intervals()
            .iter()
            .map(|bar| (scale(bar.birth), scale(bar.death)))
            .collect(),
    }
}

/// Shannon entropy (natural log) of the lifetime distribution, lifetimes
/// counted as `death - birth + 1`. Zero for an empty diagram.
pub fn persistence_entropy(diagram: &PersistenceDiagram) -> f64 {
    let lifetimes: Vec<f64> = diagram.intervals().iter().map(|b| b.lifetime() as f64).collect();
    let total: f64 = lifetimes.iter().sum();
    if total == 0.0 {
        return 0.0;
    }
    let entropy: f64 = lifetimes
        .iter()
        .map(|&l| {
            let p = l / total;
            -p * p.ln()
        })
        .sum();
    entropy.max(0.0)
}

/// Number of bars alive at `resolution` evenly spaced points over the
/// diagram's index range; sample points round half-up to an index.
pub fn betti_curve(diagram: &PersistenceDiagram, resolution: usize) -> Vec<f64> {
    let first = diagram.first_index() as f64;
    let last = diagram.max_index() as f64;
    (0..resolution)
        .map(|k| {
            let t = if resolution > 1 {
                first + (last - first) * k as f64 / (resolution - 1) as f64
            } else {
                first
            };
            let index = (t + 0.5 + 1e-9).floor() as usize;
            diagram.intervals().iter().filter(|b| b.contains(index)).count() as f64
        })
        .collect()
}

/// Filter, normalize and vectorize one diagram, concatenating the
/// configured homology dimensions in ascending order.
pub fn vectorize_diagram(diagram: &PersistenceDiagram, config: &FeatureConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(config.width_per_diagram());
    for dim in config.sorted_dims() {
        let bars = filter_bars(&diagram.restrict(dim), config.min_persistence);
        match config.scheme {
            Scheme::PersImg => {
                let grid = ImageGrid::square(config.image_resolution, config.sigma);
                out.extend(persistence_image(&normalize_diagram(&bars), &grid));
            }
            Scheme::PersEntropy => out.push(persistence_entropy(&bars)),
            Scheme::BettiCurve => out.extend(betti_curve(&bars, config.curve_resolution)),
        }
    }
    out
}

/// Zigzag barcode of a sample under the graph-construction part of a config.
pub fn sample_diagram(sample: &AttentionSample, config: &FeatureConfig) -> Result<PersistenceDiagram> {
    let run = || -> Result<PersistenceDiagram> {
        let graphs = build_graph_sequence(sample, config.top_percent, config.depth_fraction)?;
        let filtration = build_zigzag(&graphs)?;
        compute_dims(&filtration, &config.sorted_dims(), Backend::default())
    };
    run().map_err(|e| e.in_sample(&sample.sample_id))
}

/// Full pipeline for one sample: graphs, zigzag, barcode, vector.
pub fn featurize_sample(sample: &AttentionSample, config: &FeatureConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let diagram = sample_diagram(sample, config)?;
    Ok(vectorize_diagram(&diagram, config))
}

/// Static baseline: each layer's descending-weight persistence vectorized on
/// its own, concatenated over the kept layers.
pub fn featurize_sample_static(sample: &AttentionSample, config: &FeatureConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let graphs = build_graph_sequence(sample, config.top_percent, config.depth_fraction)
        .map_err(|e| e.in_sample(&sample.sample_id))?;
    Ok(graphs
        .iter()
        .flat_map(|g| vectorize_diagram(&static_persistence(g), config))
        .collect())
}
