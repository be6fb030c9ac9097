//! Bagged CART trees with Gini splits.
//!
//! Tree `i` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `i`, so every tree has an independent, reproducible substream and trees
//! can be grown in parallel.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Score improvements smaller than this count as ties.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 10,
            seed: 0,
        }
    }
}

/// Flattened binary tree. Node 0 is the root; `feature[i] < 0` marks a leaf.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i64>,
    pub threshold: Vec<f64>,
    pub left: Vec<i64>,
    pub right: Vec<i64>,
    pub leaf_probs: Vec<[f64; 2]>,
}

impl Tree {
    fn push_leaf(&mut self, counts: [usize; 2]) -> usize {
        let n = (counts[0] + counts[1]) as f64;
        self.feature.push(-1);
        self.threshold.push(0.0);
        self.left.push(-1);
        self.right.push(-1);
        self.leaf_probs.push([counts[0] as f64 / n, counts[1] as f64 / n]);
        self.feature.len() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.feature.len()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, node: usize) -> usize {
            if t.feature[node] < 0 {
                0
            } else {
                1 + go(t, t.left[node] as usize).max(go(t, t.right[node] as usize))
            }
        }
        go(self, 0)
    }

    /// Class-1 probability of the leaf reached by `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = 0;
        while self.feature[node] >= 0 {
            let f = self.feature[node] as usize;
            node = if x[f] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            } as usize;
        }
        self.leaf_probs[node][1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub feature_dim: usize,
    pub trees: Vec<Tree>,
}

struct Split {
    score: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    mtry: usize,
    max_depth: usize,
    rng: ChaCha8Rng,
    features: Vec<usize>,
    tree: Tree,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let ones = idx.iter().filter(|&&i| self.y[i] == 1).count();
        [idx.len() - ones, ones]
    }

    /// Best threshold on one feature, or `None` when the feature is constant
    /// on this node. Score is `sum over children of (n0^2 + n1^2) / n`,
    /// which grows as the weighted Gini impurity shrinks.
    fn best_threshold(&self, idx: &[usize], feature: usize, total: [usize; 2]) -> Option<Split> {
        let mut pairs: Vec<(f64, u8)> = idx.iter().map(|&i| (self.x[i][feature], self.y[i])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[pairs.len() - 1].0 {
            return None;
        }
        let mut left = [0usize; 2];
        let mut best: Option<Split> = None;
        for k in 0..pairs.len() - 1 {
            left[pairs[k].1 as usize] += 1;
            let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
            if lo == hi {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = gini_score(left) + gini_score(right);
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            if best.as_ref().is_none_or(|b| score > b.score + GAIN_EPS) {
                best = Some(Split {
                    score,
                    feature,
                    threshold,
                });
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        if depth >= self.max_depth || counts[0] == 0 || counts[1] == 0 || idx.len() < 2 {
            return self.tree.push_leaf(counts);
        }
        let parent_score = gini_score(counts);

        self.features.shuffle(&mut self.rng);
        let mut best: Option<Split> = None;
        let mut examined = 0;
        for pos in 0..self.features.len() {
            if examined >= self.mtry {
                break;
            }
            let f = self.features[pos];
            let Some(split) = self.best_threshold(&idx, f, counts) else {
                continue;
            };
            examined += 1;
            let better = match &best {
                None => true,
                Some(b) if split.score > b.score + GAIN_EPS => true,
                Some(b) if (split.score - b.score).abs() <= GAIN_EPS => {
                    (split.feature, split.threshold) < (b.feature, b.threshold)
                }
                _ => false,
            };
            if better {
                best = Some(split);
            }
        }
        let Some(split) = best.filter(|s| s.score > parent_score + GAIN_EPS) else {
            return self.tree.push_leaf(counts);
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.x[i][split.feature] <= split.threshold);
        let node = self.tree.push_leaf(counts);
        self.tree.feature[node] = split.feature as i64;
        self.tree.threshold[node] = split.threshold;
        let l = self.grow(left_idx, depth + 1);
        let r = self.grow(right_idx, depth + 1);
        self.tree.left[node] = l as i64;
        self.tree.right[node] = r as i64;
        node
    }
}

fn gini_score(c: [usize; 2]) -> f64 {
    let n = c[0] + c[1];
    if n == 0 {
        return 0.0;
    }
    ((c[0] * c[0] + c[1] * c[1]) as f64) / n as f64
}

fn check_training_data(x: &[Vec<f64>], y: &[u8]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    let ones = y.iter().filter(|&&l| l == 1).count();
    let zeros = y.iter().filter(|&&l| l == 0).count();
    if ones + zeros != y.len() {
        return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
    }
    if ones == 0 || zeros == 0 {
        return Err(Error::SingleClass);
    }
    for (class, count) in [(0u8, zeros), (1, ones)] {
        if count < 2 {
            return Err(Error::ClassTooSmall { class, count });
        }
    }
    let dim = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: row.len(),
                row: Some(i),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(dim)
}

impl ForestModel {
    pub fn train(x: &[Vec<f64>], y: &[u8], params: ForestParams) -> Result<Self> {
        let dim = check_training_data(x, y)?;
        if params.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be positive".into()));
        }
        let mtry = ((dim as f64).sqrt().floor() as usize).max(1);
        let n = x.len();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(t as u64);
                let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut grower = Grower {
                    x,
                    y,
                    mtry,
                    max_depth: params.max_depth,
                    rng,
                    features: (0..dim).collect(),
                    tree: Tree {
                        feature: Vec::new(),
                        threshold: Vec::new(),
                        left: Vec::new(),
                        right: Vec::new(),
                        leaf_probs: Vec::new(),
                    },
                };
                grower.grow(bootstrap, 0);
                grower.tree
            })
            .collect();
        Ok(Self {
            format_version: MODEL_FORMAT_VERSION,
            n_trees: params.n_trees,
            max_depth: params.max_depth,
            seed: params.seed,
            feature_dim: dim,
            trees,
        })
    }

    /// Mean class-1 leaf frequency over trees, one score per row.
    pub fn predict_proba(&self, x: &[Vec<f64>]) -> Result<Vec<f64>> {
        for (i, row) in x.iter().enumerate() {
            if row.len() != self.feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.feature_dim,
                    found: row.len(),
                    row: Some(i),
                });
            }
        }
        let n = self.trees.len() as f64;
        Ok(x.iter()
            .map(|row| {
                let s: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
                (s / n).clamp(0.0, 1.0)
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ForestModel = serde_json::from_str(text).map_err(|e| Error::Parse {
            what: "forest model".into(),
            reason: e.to_string(),
        })?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Parse {
                what: "forest model".into(),
                reason: format!("unsupported format_version {}", model.format_version),
            });
        }
        model.check()?;
        Ok(model)
    }

    /// Structural invariants of every tree.
    pub fn check(&self) -> Result<()> {
        for (ti, t) in self.trees.iter().enumerate() {
            let n = t.num_nodes();
            let bad = |msg: &str| Err(Error::Invariant(format!("tree {ti}: {msg}")));
            if n == 0 || t.threshold.len() != n || t.left.len() != n || t.right.len() != n || t.leaf_probs.len() != n {
                return bad("ragged node arrays");
            }
            for i in 0..n {
                if t.feature[i] >= 0 {
                    if t.feature[i] as usize >= self.feature_dim {
                        return bad("feature index out of range");
                    }
                    let (l, r) = (t.left[i], t.right[i]);
                    if l <= i as i64 || r <= i as i64 || l as usize >= n || r as usize >= n {
                        return bad("bad child index");
                    }
                } else if (t.leaf_probs[i][0] + t.leaf_probs[i][1] - 1.0).abs() > 1e-9 {
                    return bad("leaf probabilities do not sum to 1");
                }
            }
            if t.depth() > self.max_depth {
                return bad("deeper than max_depth");
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
