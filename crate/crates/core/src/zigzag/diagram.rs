use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed bar `[birth, death]` in snapshot-index units: the feature is alive
/// at every index in between, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PersistenceInterval {
    pub dim: u8,
    pub birth: usize,
    pub death: usize,
}

impl PersistenceInterval {
    pub fn new(dim: u8, birth: usize, death: usize) -> Self {
        debug_assert!(birth <= death);
        Self { dim, birth, death }
    }

    /// Number of snapshots the feature is alive for.
    pub fn lifetime(&self) -> usize {
        self.death - self.birth + 1
    }

    pub fn contains(&self, index: usize) -> bool {
        self.birth <= index && index <= self.death
    }
}

/// Multiset of bars over the index range `first_index..=max_index`.
/// Zigzag diagrams start at index 1; static per-layer diagrams start at 0
/// (the vertex-only stage before any edge enters).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistenceDiagram {
    intervals: Vec<PersistenceInterval>,
    first_index: usize,
    max_index: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    max_index: usize,
    sample_id: String,
}

impl PersistenceDiagram {
    /// Bars are kept in canonical `(dim, birth, death)` order.
    pub fn new(mut intervals: Vec<PersistenceInterval>, first_index: usize, max_index: usize) -> Self {
        intervals.sort_unstable();
        Self {
            intervals,
            first_index,
            max_index,
        }
    }

    pub fn empty(first_index: usize, max_index: usize) -> Self {
        Self::new(Vec::new(), first_index, max_index)
    }

    pub fn intervals(&self) -> &[PersistenceInterval] {
        &self.intervals
    }

    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn dims_present(&self) -> BTreeSet<u8> {
        self.intervals.iter().map(|i| i.dim).collect()
    }

    pub fn of_dim(&self, dim: u8) -> impl Iterator<Item = &PersistenceInterval> + '_ {
        self.intervals.iter().filter(move |i| i.dim == dim)
    }

    /// Sub-diagram holding only bars of one dimension.
    pub fn restrict(&self, dim: u8) -> PersistenceDiagram {
        Self {
            intervals: self.of_dim(dim).copied().collect(),
            first_index: self.first_index,
            max_index: self.max_index,
        }
    }

    /// Number of bars of `dim` alive at `index`.
    pub fn count_alive(&self, dim: u8, index: usize) -> usize {
        self.of_dim(dim).filter(|i| i.contains(index)).count()
    }

    pub fn retain(&self, keep: impl Fn(&PersistenceInterval) -> bool) -> PersistenceDiagram {
        Self {
            intervals: self.intervals.iter().copied().filter(|i| keep(i)).collect(),
            first_index: self.first_index,
            max_index: self.max_index,
        }
    }

    /// JSON-lines barcode: a header object then one object per bar.
    pub fn write_jsonl(&self, sample_id: &str, mut out: impl Write) -> Result<()> {
        let header = Header {
            max_index: self.max_index,
            sample_id: sample_id.to_string(),
        };
        let io = |e: std::io::Error| Error::io("<barcode>", e);
        writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes")).map_err(io)?;
        for bar in &self.intervals {
            writeln!(
                out,
                "{{\"dim\":{},\"birth\":{},\"death\":{}}}",
                bar.dim, bar.birth, bar.death
            )
            .map_err(io)?;
        }
        Ok(())
    }

    /// Parses the JSON-lines barcode; returns the sample id and the diagram
    /// (with first index 1).
    pub fn read_jsonl(input: impl BufRead) -> Result<(String, PersistenceDiagram)> {
        let parse = |reason: String| Error::Parse {
            what: "barcode".into(),
            reason,
        };
        let mut lines = input.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| parse("missing header".into()))?
            .map_err(|e| Error::io("<barcode>", e))?;
        let header: Header = serde_json::from_str(&header_line).map_err(|e| parse(e.to_string()))?;
        let mut intervals = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::io("<barcode>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let bar: PersistenceInterval = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
            intervals.push(bar);
        }
        Ok((
            header.sample_id,
            PersistenceDiagram::new(intervals, 1, header.max_index),
        ))
    }
}
