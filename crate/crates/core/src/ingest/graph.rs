use serde::{Deserialize, Serialize};

use super::{AttentionMatrix, AttentionSample};
use crate::error::{Error, Result};

/// Undirected edge between two token positions (0-based), stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub u: u32,
    pub v: u32,
}

impl Edge {
    pub fn new(a: u32, b: u32) -> Self {
        assert_ne!(a, b, "self-loops are not edges");
        if a < b {
            Edge { u: a, v: b }
        } else {
            Edge { u: b, v: a }
        }
    }
}

/// Thresholded undirected attention graph of one layer. Vertices are always
/// `0..num_vertices`; `edges` is sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionGraph {
    pub layer: usize,
    pub num_vertices: usize,
    pub threshold: f64,
    edges: Vec<(Edge, f64)>,
}

impl AttentionGraph {
    /// Builds a graph from explicit weighted edges. Duplicate pairs keep the
    /// larger weight.
    pub fn from_edges(layer: usize, num_vertices: usize, edges: impl IntoIterator<Item = (Edge, f64)>) -> Result<Self> {
        let mut edges: Vec<(Edge, f64)> = edges.into_iter().collect();
        for (e, _) in &edges {
            if e.v as usize >= num_vertices {
                return Err(Error::InvalidParameter(format!(
                    "edge ({}, {}) out of range for {num_vertices} vertices",
                    e.u, e.v
                )));
            }
        }
        edges.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
        edges.dedup_by_key(|(e, _)| *e);
        let threshold = edges.iter().map(|(_, w)| *w).fold(f64::INFINITY, f64::min);
        Ok(Self {
            layer,
            num_vertices,
            threshold: if threshold.is_finite() { threshold } else { 0.0 },
            edges,
        })
    }

    /// Unweighted convenience constructor (every weight 1).
    pub fn unweighted(layer: usize, num_vertices: usize, pairs: &[(u32, u32)]) -> Result<Self> {
        Self::from_edges(layer, num_vertices, pairs.iter().map(|&(a, b)| (Edge::new(a, b), 1.0)))
    }

    pub fn edges(&self) -> &[(Edge, f64)] {
        &self.edges
    }

    pub fn edge_set(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|(e, _)| *e)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, edge: Edge) -> Option<f64> {
        self.edges
            .binary_search_by(|(e, _)| e.cmp(&edge))
            .ok()
            .map(|i| self.edges[i].1)
    }
}

/// Keeps the `top_percent` share of strictly positive off-diagonal attention
/// weights of one layer. The threshold is the k-th largest candidate with
/// `k = max(1, floor(top_percent / 100 * n))`; every entry tied with it is kept.
/// A pair becomes an edge when either directed weight clears the threshold and
/// carries the larger of the two.
pub fn build_graph(matrix: &AttentionMatrix, layer: usize, top_percent: f64) -> Result<AttentionGraph> {
    check_top_percent(top_percent)?;
    let t = matrix.size();
    let mut candidates: Vec<f32> = Vec::new();
    for i in 0..t {
        for j in 0..t {
            let w = matrix.get(i, j);
            if i != j && w > 0.0 {
                candidates.push(w);
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::DegenerateLayer { layer });
    }
    candidates.sort_by(|a, b| b.total_cmp(a));
    let keep = ((top_percent / 100.0 * candidates.len() as f64) + 1e-9).floor() as usize;
    let threshold = candidates[keep.clamp(1, candidates.len()) - 1];

    let mut edges = Vec::new();
    for i in 0..t {
        for j in i + 1..t {
            let w = matrix.get(i, j).max(matrix.get(j, i));
            if w >= threshold {
                edges.push((Edge::new(i as u32, j as u32), f64::from(w)));
            }
        }
    }
    Ok(AttentionGraph {
        layer,
        num_vertices: t,
        threshold: f64::from(threshold),
        edges,
    })
}

fn check_top_percent(top_percent: f64) -> Result<()> {
    if !(top_percent > 0.0 && top_percent <= 100.0) {
        return Err(Error::InvalidParameter(format!(
            "top_percent must lie in (0, 100], got {top_percent}"
        )));
    }
    Ok(())
}

/// Number of leading layers kept for a depth fraction: `ceil(fraction * L)`.
pub fn layers_kept(num_layers: usize, depth_fraction: f64) -> Result<usize> {
    if !(depth_fraction > 0.0 && depth_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "depth_fraction must lie in (0, 1], got {depth_fraction}"
        )));
    }
    let kept = ((depth_fraction * num_layers as f64) - 1e-9).ceil().max(1.0) as usize;
    let kept = kept.min(num_layers);
    if kept < 2 {
        return Err(Error::InsufficientDepth {
            fraction: depth_fraction,
            layers: num_layers,
            kept,
        });
    }
    Ok(kept)
}

/// Attention graphs of the leading `ceil(depth_fraction * L)` layers.
pub fn build_graph_sequence(
    sample: &AttentionSample,
    top_percent: f64,
    depth_fraction: f64,
) -> Result<Vec<AttentionGraph>> {
    check_top_percent(top_percent)?;
    let kept = layers_kept(sample.num_layers(), depth_fraction)?;
    sample.layers()[..kept]
        .iter()
        .enumerate()
        .map(|(idx, m)| build_graph(m, idx + 1, top_percent))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[f32]]) -> AttentionMatrix {
        AttentionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn top_34_percent_of_three_keeps_the_largest() {
        // off-diagonal positives: 0.6 at (2,1), 0.2 at (3,1), 0.3 at (3,2), 1-based
        let m = mat(&[&[1.0, 0.0, 0.0], &[0.6, 0.4, 0.0], &[0.2, 0.3, 0.5]]);
        let g = build_graph(&m, 1, 34.0).unwrap();
        assert_eq!(g.threshold, f64::from(0.6f32));
        assert_eq!(g.edges(), &[(Edge::new(0, 1), f64::from(0.6f32))]);
    }

    #[test]
    fn top_100_percent_keeps_every_positive_pair() {
        let m = mat(&[&[1.0, 0.0, 0.0], &[0.6, 0.4, 0.0], &[0.2, 0.3, 0.5]]);
        let g = build_graph(&m, 1, 100.0).unwrap();
        assert_eq!(g.num_edges(), 3);
    }

    #[test]
    fn ties_at_threshold_are_included() {
        let m = mat(&[&[0.5, 0.25, 0.25], &[0.25, 0.5, 0.25], &[0.25, 0.25, 0.5]]);
        let g = build_graph(&m, 1, 50.0).unwrap();
        assert_eq!(g.num_edges(), 3);
    }

    #[test]
    fn all_zero_off_diagonal_is_degenerate() {
        let m = mat(&[&[1.0, 0.0], &[0.0, 1.0]]);
        assert!(matches!(
            build_graph(&m, 4, 10.0),
            Err(Error::DegenerateLayer { layer: 4 })
        ));
    }

    #[test]
    fn depth_fraction_arithmetic() {
        assert_eq!(layers_kept(32, 0.7).unwrap(), 23);
        assert_eq!(layers_kept(32, 1.0).unwrap(), 32);
        assert_eq!(layers_kept(10, 0.7).unwrap(), 7);
        assert!(matches!(
            layers_kept(2, 0.4),
            Err(Error::InsufficientDepth { kept: 1, .. })
        ));
        assert!(layers_kept(4, 0.0).is_err());
        assert!(layers_kept(4, 1.5).is_err());
    }

    fn random_matrix() -> impl Strategy<Value = AttentionMatrix> {
        (3usize..8).prop_flat_map(|t| {
            prop::collection::vec(0.0f32..1.0, t * t).prop_map(move |mut v| {
                for i in 0..t {
                    v[i * t + i] = 1.0;
                }
                AttentionMatrix::new(t, v).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn percentile_is_monotone(m in random_matrix(), a in 1.0f64..100.0, b in 1.0f64..100.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let small = build_graph(&m, 1, lo).unwrap();
            let large = build_graph(&m, 1, hi).unwrap();
            for e in small.edge_set() {
                prop_assert!(large.weight(e).is_some());
            }
        }

        #[test]
        fn symmetrization_uses_the_larger_direction(m in random_matrix(), p in 1.0f64..100.0) {
            let g = build_graph(&m, 1, p).unwrap();
            let thr = g.threshold as f32;
            for i in 0..m.size() {
                for j in i + 1..m.size() {
                    let w = m.get(i, j).max(m.get(j, i));
                    let e = Edge::new(i as u32, j as u32);
                    prop_assert_eq!(g.weight(e).is_some(), w >= thr);
                    if let Some(gw) = g.weight(e) {
                        prop_assert_eq!(gw, f64::from(w));
                        prop_assert!(gw >= g.threshold);
                    }
                }
            }
        }
    }
}
