use crate::ingest::Edge;

/// Disjoint-set forest with path compression and union by rank.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Returns `true` when the two nodes were in different sets.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// `(b0, b1)` of the graph on vertices `0..num_vertices` with the given
/// edges: components by union-find, cycles by the Euler relation
/// `b1 = |E| - |V| + b0`. Duplicate edges are counted once.
pub fn betti_numbers(num_vertices: usize, edges: &[Edge]) -> (usize, usize) {
    let mut sorted = edges.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut dsu = DisjointSet::new(num_vertices);
    for e in &sorted {
        dsu.union(e.u as usize, e.v as usize);
    }
    let b0 = dsu.components();
    (b0, sorted.len() + b0 - num_vertices)
}
