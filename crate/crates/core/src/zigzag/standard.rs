//! Standard (non-zigzag) persistence of a graph filtration by boundary
//! matrix column reduction over GF(2).

use super::diagram::{PersistenceDiagram, PersistenceInterval};
use crate::ingest::{AttentionGraph, Edge};

/// Barcode of the ascending filtration in which every vertex enters at
/// `vertex_value` and each edge at its listed value. Edges must be listed in
/// entry order (non-decreasing values). A pair whose death value exceeds its
/// birth value yields the closed bar `[birth, death - 1]`; unpaired simplices
/// yield `[birth, last_index]`.
pub fn standard_persistence(
    num_vertices: usize,
    vertex_value: usize,
    edges: &[(Edge, usize)],
    last_index: usize,
) -> Vec<PersistenceInterval> {
    debug_assert!(edges.windows(2).all(|w| w[0].1 <= w[1].1));
    let n = num_vertices + edges.len();
    let value = |s: usize| {
        if s < num_vertices {
            vertex_value
        } else {
            edges[s - num_vertices].1
        }
    };

    // column of simplex index -> reduced boundary (sorted ascending)
    let mut columns: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut low_owner: Vec<Option<usize>> = vec![None; n];
    let mut paired = vec![false; n];
    let mut bars = Vec::new();

    for (k, (e, _)) in edges.iter().enumerate() {
        let j = num_vertices + k;
        let mut col = vec![e.u as usize, e.v as usize];
        while let Some(&low) = col.last() {
            match low_owner[low] {
                Some(other) => col = symmetric_difference(&col, &columns[other]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            low_owner[low] = Some(j);
            paired[low] = true;
            paired[j] = true;
            let (birth, death) = (value(low), value(j));
            if death > birth {
                bars.push(PersistenceInterval::new(0, birth, death - 1));
            }
        }
        columns[j] = col;
    }

    for (s, &done) in paired.iter().enumerate() {
        if !done {
            let dim = if s < num_vertices { 0 } else { 1 };
            bars.push(PersistenceInterval::new(dim, value(s), last_index));
        }
    }
    bars
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Persistence of one layer on its own: edges enter by decreasing weight
/// (ties by vertex pair), indices are edge ranks `1..=m`, and all vertices
/// are present at index 0. Loops never die and end at `m`.
pub fn static_persistence(graph: &AttentionGraph) -> PersistenceDiagram {
    let mut order: Vec<(Edge, f64)> = graph.edges().to_vec();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let ranked: Vec<(Edge, usize)> = order.iter().enumerate().map(|(r, (e, _))| (*e, r + 1)).collect();
    let m = ranked.len();
    PersistenceDiagram::new(standard_persistence(graph.num_vertices, 0, &ranked, m), 0, m)
}
