//! Barcodes by Mobius inversion of the interval rank function.
//!
//! For a zigzag of graphs on a fixed vertex set every arrow is an inclusion,
//! so `H1` of each snapshot is its cycle space inside the common edge space
//! and `H0` is dual to the component-indicator space inside the common vertex
//! space. In both cases the limit-to-colimit map over `[b, d]` is injective
//! onto the intersection of those subspaces, which is `Z1` of the
//! intersected graph for loops and `ann(B0)` of the union graph for
//! components. Its rank counts the bars containing `[b, d]`; the multiplicity
//! of `[b, d]` itself is
//! `rk(b, d) - rk(b-1, d) - rk(b, d+1) + rk(b-1, d+1)`.

use super::betti::DisjointSet;
use super::diagram::PersistenceInterval;
use super::ZigzagFiltration;
use crate::error::{Error, Result};
use crate::ingest::Edge;

/// `rk[b][d]` for `1 <= b <= d <= n`, zero-padded so that `rk[0][*]` and
/// `rk[*][n+1]` read as zero.
struct RankTable {
    n: usize,
    cells: Vec<usize>,
}

impl RankTable {
    fn new(n: usize) -> Self {
        Self {
            n,
            cells: vec![0; (n + 2) * (n + 2)],
        }
    }

    fn set(&mut self, b: usize, d: usize, value: usize) {
        self.cells[b * (self.n + 2) + d] = value;
    }

    fn get(&self, b: usize, d: usize) -> i64 {
        self.cells[b * (self.n + 2) + d] as i64
    }

    fn invert(&self, dim: u8) -> Result<Vec<PersistenceInterval>> {
        let mut bars = Vec::new();
        for b in 1..=self.n {
            for d in b..=self.n {
                let mult = self.get(b, d) - self.get(b - 1, d) - self.get(b, d + 1) + self.get(b - 1, d + 1);
                if mult < 0 {
                    return Err(Error::Invariant(format!(
                        "negative multiplicity {mult} for dim-{dim} interval [{b}, {d}]"
                    )));
                }
                bars.extend(std::iter::repeat_n(PersistenceInterval::new(dim, b, d), mult as usize));
            }
        }
        Ok(bars)
    }
}

/// Dimension-0 bars: `rk(b, d)` is the component count of the union of the
/// snapshots in `[b, d]`.
pub(super) fn components(filtration: &ZigzagFiltration) -> Result<Vec<PersistenceInterval>> {
    let n = filtration.max_index();
    let t = filtration.num_vertices();
    let mut table = RankTable::new(n);
    for b in 1..=n {
        let mut dsu = DisjointSet::new(t);
        for d in b..=n {
            for e in filtration.snapshot(d).edges() {
                dsu.union(e.u as usize, e.v as usize);
            }
            table.set(b, d, dsu.components());
            if dsu.components() == 1 {
                for rest in d + 1..=n {
                    table.set(b, rest, 1);
                }
                break;
            }
        }
    }
    table.invert(0)
}

fn intersect(current: &[Edge], other: &super::Snapshot) -> Vec<Edge> {
    current.iter().copied().filter(|&e| other.contains(e)).collect()
}

fn cycle_rank(num_vertices: usize, edges: &[Edge]) -> usize {
    let mut dsu = DisjointSet::new(num_vertices);
    let mut independent = 0;
    for e in edges {
        if !dsu.union(e.u as usize, e.v as usize) {
            independent += 1;
        }
    }
    independent
}

/// Dimension-1 bars: `rk(b, d)` is the cycle rank of the intersection of the
/// snapshots in `[b, d]`.
pub(super) fn loops(filtration: &ZigzagFiltration) -> Result<Vec<PersistenceInterval>> {
    let n = filtration.max_index();
    let t = filtration.num_vertices();
    let mut table = RankTable::new(n);
    for b in 1..=n {
        let mut common = filtration.snapshot(b).edge_list();
        for d in b..=n {
            if d > b {
                common = intersect(&common, filtration.snapshot(d));
            }
            if common.len() < 3 {
                break;
            }
            table.set(b, d, cycle_rank(t, &common));
        }
    }
    table.invert(1)
}
