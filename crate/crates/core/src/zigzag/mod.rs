//! Union-interleaved zigzag filtrations of attention graphs and their
//! barcodes in homology dimensions 0 and 1.
//!
//! The layer graphs `G_1, .., G_L` are woven into
//! `G_1 -> G_1 u G_2 <- G_2 -> G_2 u G_3 <- .. <- G_L`, indexed `1..=2L-1`.
//! Odd indices are layers, even indices are unions of neighbouring layers.
//!
//! Two backends compute the interval decomposition:
//!
//! * [`Backend::RankInversion`] (default) inverts the interval rank function.
//!   For a zigzag of graphs on a fixed vertex set the number of bars that
//!   contain `[b, d]` is `b1` of the intersection of the snapshots in
//!   `[b, d]` for loops and `b0` of their union for components, so the
//!   barcode follows by Mobius inversion over intervals.
//! * [`Backend::Reference`] builds the homology modules explicitly as GF(2)
//!   matrices and peels off intervals left to right. It is slower and meant
//!   for cross-validation on small inputs.

mod betti;
mod diagram;
mod gf2;
mod rank;
mod reference;
mod standard;

pub use betti::betti_numbers;
pub use diagram::{PersistenceDiagram, PersistenceInterval};
pub use standard::{standard_persistence, static_persistence};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AttentionGraph, Edge};

/// One graph of a zigzag filtration, edges sorted, weights carried as metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    edges: Vec<(Edge, f64)>,
}

impl Snapshot {
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|(e, _)| *e)
    }

    pub fn weighted_edges(&self) -> &[(Edge, f64)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, edge: Edge) -> bool {
        self.edges.binary_search_by(|(e, _)| e.cmp(&edge)).is_ok()
    }

    pub fn edge_list(&self) -> Vec<Edge> {
        self.edges().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZigzagFiltration {
    num_vertices: usize,
    snapshots: Vec<Snapshot>,
}

impl ZigzagFiltration {
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_layers(&self) -> usize {
        self.snapshots.len().div_ceil(2)
    }

    /// Largest snapshot index, `2L - 1`.
    pub fn max_index(&self) -> usize {
        self.snapshots.len()
    }

    /// Snapshot at a 1-based index.
    pub fn snapshot(&self, index: usize) -> &Snapshot {
        &self.snapshots[index - 1]
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// `true` when the arrow between `index` and `index + 1` is an inclusion
    /// into `index + 1` (layer into union).
    pub fn is_forward(index: usize) -> bool {
        index % 2 == 1
    }
}

fn union_snapshot(a: &AttentionGraph, b: &AttentionGraph) -> Snapshot {
    let (x, y) = (a.edges(), b.edges());
    let mut edges = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        match (x.get(i), y.get(j)) {
            (Some(&(ea, wa)), Some(&(eb, wb))) if ea == eb => {
                edges.push((ea, wa.max(wb)));
                i += 1;
                j += 1;
            }
            (Some(&(ea, wa)), Some(&(eb, _))) if ea < eb => {
                edges.push((ea, wa));
                i += 1;
            }
            (Some(&(ea, wa)), None) => {
                edges.push((ea, wa));
                i += 1;
            }
            (_, Some(&(eb, wb))) => {
                edges.push((eb, wb));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    Snapshot { edges }
}

/// Interleaves layer graphs with the unions of neighbouring layers. An edge
/// present in both layers keeps the larger weight in the union.
pub fn build_zigzag(graphs: &[AttentionGraph]) -> Result<ZigzagFiltration> {
    let first = graphs
        .first()
        .ok_or_else(|| Error::InvalidParameter("a zigzag needs at least 2 graphs, found 0".into()))?;
    if graphs.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a zigzag needs at least 2 graphs, found {}",
            graphs.len()
        )));
    }
    let t = first.num_vertices;
    if let Some(g) = graphs.iter().find(|g| g.num_vertices != t) {
        return Err(Error::VertexCountMismatch {
            expected: t,
            found: g.num_vertices,
        });
    }
    let mut snapshots = Vec::with_capacity(2 * graphs.len() - 1);
    for (idx, g) in graphs.iter().enumerate() {
        if idx > 0 {
            snapshots.push(union_snapshot(&graphs[idx - 1], g));
        }
        snapshots.push(Snapshot {
            edges: g.edges().to_vec(),
        });
    }
    Ok(ZigzagFiltration {
        num_vertices: t,
        snapshots,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    RankInversion,
    Reference,
}

/// Barcode of the zigzag in dimensions `0..=max_dim` (`max_dim` is 0 or 1).
pub fn compute_zigzag_persistence(filtration: &ZigzagFiltration, max_dim: u8) -> Result<PersistenceDiagram> {
    compute_zigzag_persistence_with(filtration, max_dim, Backend::default())
}

pub fn compute_zigzag_persistence_with(
    filtration: &ZigzagFiltration,
    max_dim: u8,
    backend: Backend,
) -> Result<PersistenceDiagram> {
    if max_dim > 1 {
        return Err(Error::InvalidParameter(format!(
            "graphs carry homology in dimensions 0 and 1 only, got max_dim {max_dim}"
        )));
    }
    let dims: &[u8] = if max_dim == 0 { &[0] } else { &[0, 1] };
    compute_dims(filtration, dims, backend)
}

/// Barcode restricted to an explicit set of dimensions.
pub fn compute_dims(filtration: &ZigzagFiltration, dims: &[u8], backend: Backend) -> Result<PersistenceDiagram> {
    let mut intervals = Vec::new();
    for &dim in dims {
        let bars = match (backend, dim) {
            (Backend::RankInversion, 0) => rank::components(filtration)?,
            (Backend::RankInversion, 1) => rank::loops(filtration)?,
            (Backend::Reference, 0 | 1) => reference::barcode(filtration, dim),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "graphs carry homology in dimensions 0 and 1 only, got {dim}"
                )))
            }
        };
        intervals.extend(bars);
    }
    Ok(PersistenceDiagram::new(intervals, 1, filtration.max_index()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(layer: usize, t: usize, pairs: &[(u32, u32)]) -> AttentionGraph {
        let shifted: Vec<_> = pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect();
        AttentionGraph::unweighted(layer, t, &shifted).unwrap()
    }

    fn edges(s: &Snapshot) -> Vec<(u32, u32)> {
        s.edges().map(|e| (e.u + 1, e.v + 1)).collect()
    }

    #[test]
    fn nested_layers() {
        let z = build_zigzag(&[g(1, 3, &[(1, 2), (2, 3), (1, 3)]), g(2, 3, &[(1, 2), (2, 3)])]).unwrap();
        let snaps: Vec<_> = z.snapshots().iter().map(edges).collect();
        assert_eq!(
            snaps,
            vec![
                vec![(1, 2), (1, 3), (2, 3)],
                vec![(1, 2), (1, 3), (2, 3)],
                vec![(1, 2), (2, 3)]
            ]
        );
    }

    #[test]
    fn disjoint_layers() {
        let z = build_zigzag(&[g(1, 3, &[(1, 2)]), g(2, 3, &[(2, 3)])]).unwrap();
        let snaps: Vec<_> = z.snapshots().iter().map(edges).collect();
        assert_eq!(snaps, vec![vec![(1, 2)], vec![(1, 2), (2, 3)], vec![(2, 3)]]);
    }

    #[test]
    fn identical_layers_give_identical_snapshots() {
        let layer = |l| g(l, 4, &[(1, 2), (3, 4)]);
        let z = build_zigzag(&[layer(1), layer(2), layer(3)]).unwrap();
        assert_eq!(z.max_index(), 5);
        assert!(z.snapshots().windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn union_keeps_the_larger_weight() {
        let a = AttentionGraph::from_edges(1, 3, [(Edge::new(0, 1), 0.3), (Edge::new(1, 2), 0.9)]).unwrap();
        let b = AttentionGraph::from_edges(2, 3, [(Edge::new(0, 1), 0.5)]).unwrap();
        let z = build_zigzag(&[a, b]).unwrap();
        assert_eq!(
            z.snapshot(2).weighted_edges(),
            &[(Edge::new(0, 1), 0.5), (Edge::new(1, 2), 0.9)]
        );
    }

    #[test]
    fn inconsistent_vertex_counts() {
        assert!(matches!(
            build_zigzag(&[g(1, 3, &[]), g(2, 4, &[])]),
            Err(Error::VertexCountMismatch { expected: 3, found: 4 })
        ));
        assert!(build_zigzag(&[g(1, 3, &[])]).is_err());
    }
}
