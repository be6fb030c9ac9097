//! Reference zigzag decomposition over GF(2).
//!
//! The homology modules are built explicitly (fundamental-cycle coordinates
//! for loops, component coordinates for `H0`) and intervals are peeled off
//! left to right. At each arrow the live bars are processed in an order in
//! which every bar may absorb the generators of all bars before it without
//! breaking the interval structure of the prefix:
//!
//! * bars born at index 1 or across a backward arrow, youngest first, then
//! * bars born across a forward arrow, oldest first.
//!
//! A forward arrow kills the first bar (in that order) whose image falls in
//! the span of earlier images; a backward arrow kills the bars whose
//! generators stay independent modulo the image, after earlier bars have
//! been absorbed.

use std::collections::HashMap;

use super::betti::DisjointSet;
use super::diagram::PersistenceInterval;
use super::gf2::{BitMatrix, BitVec};
use super::{Snapshot, ZigzagFiltration};
use crate::ingest::Edge;

pub(super) enum Arrow {
    /// `M_k -> M_{k+1}`, matrix with `dim M_{k+1}` rows.
    Forward(BitMatrix),
    /// `M_k <- M_{k+1}`, matrix with `dim M_k` rows.
    Backward(BitMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BirthKind {
    /// Present at index 1, or born as a kernel class across a backward arrow.
    Backward,
    /// Born as a cokernel class across a forward arrow.
    Forward,
}

struct LiveBar {
    birth: usize,
    kind: BirthKind,
    rep: BitVec,
}

/// Incremental echelon basis keyed by lowest set bit, with a payload vector
/// reduced in lockstep.
struct Echelon {
    pivots: Vec<Option<usize>>,
    rows: Vec<(BitVec, BitVec)>,
}

impl Echelon {
    fn new(len: usize) -> Self {
        Self {
            pivots: vec![None; len],
            rows: Vec::new(),
        }
    }

    fn reduce(&self, x: &mut BitVec, payload: &mut BitVec) {
        while let Some(p) = x.pivot() {
            match self.pivots[p] {
                Some(r) => {
                    x.xor_assign(&self.rows[r].0);
                    payload.xor_assign(&self.rows[r].1);
                }
                None => break,
            }
        }
    }

    fn insert(&mut self, x: BitVec, payload: BitVec) {
        let p = x.pivot().expect("inserting a zero vector");
        self.pivots[p] = Some(self.rows.len());
        self.rows.push((x, payload));
    }
}

fn processing_order(bars: &[LiveBar]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..bars.len()).collect();
    order.sort_by_key(|&i| match bars[i].kind {
        BirthKind::Backward => (0, usize::MAX - bars[i].birth),
        BirthKind::Forward => (1, bars[i].birth),
    });
    order
}

/// Interval decomposition `(birth, death)` of a zigzag module given by its
/// dimensions and arrow matrices.
pub(super) fn decompose(dims: &[usize], arrows: &[Arrow]) -> Vec<(usize, usize)> {
    assert_eq!(arrows.len() + 1, dims.len());
    let n = dims.len();
    let mut done = Vec::new();
    let mut live: Vec<LiveBar> = (0..dims[0])
        .map(|r| LiveBar {
            birth: 1,
            kind: BirthKind::Backward,
            rep: BitVec::unit(dims[0], r),
        })
        .collect();

    for (k0, arrow) in arrows.iter().enumerate() {
        let k = k0 + 1;
        let next_dim = dims[k0 + 1];
        let order = processing_order(&live);
        let mut next = Vec::with_capacity(next_dim);
        match arrow {
            Arrow::Forward(f) => {
                let mut span = Echelon::new(next_dim);
                let mut keep = vec![None; live.len()];
                for &j in &order {
                    let image = f.apply(&live[j].rep);
                    let mut x = image.clone();
                    let mut unused = BitVec::zeros(0);
                    span.reduce(&mut x, &mut unused);
                    if x.is_zero() {
                        done.push((live[j].birth, k));
                    } else {
                        span.insert(x, BitVec::zeros(0));
                        keep[j] = Some(image);
                    }
                }
                for (bar, image) in live.into_iter().zip(keep) {
                    if let Some(rep) = image {
                        next.push(LiveBar { rep, ..bar });
                    }
                }
                for r in 0..next_dim {
                    let mut x = BitVec::unit(next_dim, r);
                    let mut unused = BitVec::zeros(0);
                    span.reduce(&mut x, &mut unused);
                    if !x.is_zero() {
                        span.insert(x, BitVec::zeros(0));
                        next.push(LiveBar {
                            birth: k + 1,
                            kind: BirthKind::Forward,
                            rep: BitVec::unit(next_dim, r),
                        });
                    }
                }
            }
            Arrow::Backward(g) => {
                let here = dims[k0];
                let mut table = Echelon::new(here);
                let mut kernel = Vec::new();
                for (r, col) in g.cols.iter().enumerate() {
                    let mut x = col.clone();
                    let mut u = BitVec::unit(next_dim, r);
                    table.reduce(&mut x, &mut u);
                    if x.is_zero() {
                        kernel.push(u);
                    } else {
                        table.insert(x, u);
                    }
                }
                let mut keep = vec![None; live.len()];
                for &j in &order {
                    let mut x = live[j].rep.clone();
                    let mut u = BitVec::zeros(next_dim);
                    table.reduce(&mut x, &mut u);
                    if x.is_zero() {
                        keep[j] = Some(u);
                    } else {
                        done.push((live[j].birth, k));
                        table.insert(x, u);
                    }
                }
                for (bar, pre) in live.into_iter().zip(keep) {
                    if let Some(rep) = pre {
                        next.push(LiveBar { rep, ..bar });
                    }
                }
                next.extend(kernel.into_iter().map(|rep| LiveBar {
                    birth: k + 1,
                    kind: BirthKind::Backward,
                    rep,
                }));
            }
        }
        debug_assert_eq!(next.len(), next_dim);
        live = next;
    }
    done.extend(live.iter().map(|b| (b.birth, n)));
    done
}

/// Component coordinates: `label[v]` is the index of `v`'s component,
/// components numbered by smallest vertex.
fn component_labels(num_vertices: usize, snapshot: &Snapshot) -> (usize, Vec<usize>) {
    let mut dsu = DisjointSet::new(num_vertices);
    for e in snapshot.edges() {
        dsu.union(e.u as usize, e.v as usize);
    }
    let mut label_of_root = HashMap::new();
    let labels = (0..num_vertices)
        .map(|v| {
            let root = dsu.find(v);
            let next = label_of_root.len();
            *label_of_root.entry(root).or_insert(next)
        })
        .collect();
    (label_of_root.len(), labels)
}

/// Cycle space with the fundamental-cycle basis of a spanning forest. The
/// coordinate of a cycle on basis vector `i` is its coefficient on the
/// `i`-th non-tree edge.
struct CycleBasis {
    non_tree: HashMap<Edge, usize>,
    cycles: Vec<Vec<Edge>>,
}

fn cycle_basis(num_vertices: usize, snapshot: &Snapshot) -> CycleBasis {
    let mut dsu = DisjointSet::new(num_vertices);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); num_vertices];
    let mut non_tree_edges = Vec::new();
    for e in snapshot.edges() {
        if dsu.union(e.u as usize, e.v as usize) {
            adj[e.u as usize].push(e.v as usize);
            adj[e.v as usize].push(e.u as usize);
        } else {
            non_tree_edges.push(e);
        }
    }
    let mut parent = vec![usize::MAX; num_vertices];
    let mut depth = vec![0usize; num_vertices];
    let mut seen = vec![false; num_vertices];
    for root in 0..num_vertices {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = v;
                    depth[w] = depth[v] + 1;
                    stack.push(w);
                }
            }
        }
    }
    let cycles = non_tree_edges
        .iter()
        .map(|&e| {
            let mut cycle = vec![e];
            let (mut a, mut b) = (e.u as usize, e.v as usize);
            while a != b {
                if depth[a] >= depth[b] {
                    cycle.push(Edge::new(a as u32, parent[a] as u32));
                    a = parent[a];
                } else {
                    cycle.push(Edge::new(b as u32, parent[b] as u32));
                    b = parent[b];
                }
            }
            cycle
        })
        .collect();
    let non_tree = non_tree_edges.into_iter().enumerate().map(|(i, e)| (e, i)).collect();
    CycleBasis { non_tree, cycles }
}

fn component_map(num_vertices: usize, small: &Snapshot, large: &Snapshot) -> BitMatrix {
    let (small_count, small_labels) = component_labels(num_vertices, small);
    let (large_count, large_labels) = component_labels(num_vertices, large);
    let mut cols = vec![BitVec::zeros(large_count); small_count];
    let mut filled = vec![false; small_count];
    for v in 0..num_vertices {
        let c = small_labels[v];
        if !filled[c] {
            filled[c] = true;
            cols[c].set(large_labels[v]);
        }
    }
    BitMatrix {
        rows: large_count,
        cols,
    }
}

fn cycle_map(small: &CycleBasis, large: &CycleBasis) -> BitMatrix {
    let rows = large.cycles.len();
    let cols = small
        .cycles
        .iter()
        .map(|cycle| {
            let mut col = BitVec::zeros(rows);
            for e in cycle {
                if let Some(&i) = large.non_tree.get(e) {
                    col.flip(i);
                }
            }
            col
        })
        .collect();
    BitMatrix { rows, cols }
}

pub(super) fn barcode(filtration: &ZigzagFiltration, dim: u8) -> Vec<PersistenceInterval> {
    let t = filtration.num_vertices();
    let snaps = filtration.snapshots();
    let (dims, arrows): (Vec<usize>, Vec<Arrow>) = if dim == 0 {
        let dims = snaps.iter().map(|s| component_labels(t, s).0).collect();
        let arrows = (1..snaps.len())
            .map(|k| {
                let (a, b) = (&snaps[k - 1], &snaps[k]);
                if ZigzagFiltration::is_forward(k) {
                    Arrow::Forward(component_map(t, a, b))
                } else {
                    Arrow::Backward(component_map(t, b, a))
                }
            })
            .collect();
        (dims, arrows)
    } else {
        let bases: Vec<CycleBasis> = snaps.iter().map(|s| cycle_basis(t, s)).collect();
        let dims = bases.iter().map(|b| b.cycles.len()).collect();
        let arrows = (1..snaps.len())
            .map(|k| {
                let (a, b) = (&bases[k - 1], &bases[k]);
                if ZigzagFiltration::is_forward(k) {
                    Arrow::Forward(cycle_map(a, b))
                } else {
                    Arrow::Backward(cycle_map(b, a))
                }
            })
            .collect();
        (dims, arrows)
    };
    decompose(&dims, &arrows)
        .into_iter()
        .map(|(b, d)| PersistenceInterval::new(dim, b, d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: &[&[usize]]) -> BitMatrix {
        BitMatrix {
            rows,
            cols: cols
                .iter()
                .map(|ones| {
                    let mut v = BitVec::zeros(rows);
                    for &i in *ones {
                        v.set(i);
                    }
                    v
                })
                .collect(),
        }
    }

    fn sorted(mut v: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
        v.sort();
        v
    }

    #[test]
    fn ordinary_persistence_follows_the_elder_rule() {
        // k -> k^2 (new class at 2) -> k (both merge into one)
        let arrows = vec![Arrow::Forward(m(2, &[&[0]])), Arrow::Forward(m(1, &[&[0], &[0]]))];
        assert_eq!(sorted(decompose(&[1, 2, 1], &arrows)), vec![(1, 3), (2, 2)]);
    }

    #[test]
    fn backward_kernel_class_is_born_later() {
        // k <- k^2 with both generators mapping onto the same class
        let arrows = vec![Arrow::Backward(m(1, &[&[0], &[0]]))];
        assert_eq!(sorted(decompose(&[1, 2], &arrows)), vec![(1, 2), (2, 2)]);
    }

    #[test]
    fn valley_splits_into_two_bars() {
        // k -> k <- k with both maps rank one, joined through the middle
        let arrows = vec![Arrow::Forward(m(1, &[&[0]])), Arrow::Backward(m(1, &[&[0]]))];
        assert_eq!(decompose(&[1, 1, 1], &arrows), vec![(1, 3)]);
        // k <- 0 -> k
        let arrows = vec![Arrow::Backward(m(1, &[])), Arrow::Forward(m(1, &[]))];
        assert_eq!(sorted(decompose(&[1, 0, 1], &arrows)), vec![(1, 1), (3, 3)]);
    }
}
