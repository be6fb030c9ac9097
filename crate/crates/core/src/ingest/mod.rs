//! Attention dump ingestion: the on-disk dump format, head averaging, and
//! per-layer attention graph construction.

mod adf;
mod dataset;
mod graph;

pub use adf::{load_sample, write_dump, write_sample, AdfManifest, ADF_FORMAT_VERSION};
pub use dataset::{read_dataset_manifest, write_dataset_manifest, DatasetEntry};
pub use graph::{build_graph, build_graph_sequence, layers_kept, AttentionGraph, Edge};

use crate::error::{Error, Result};

/// Tolerance on attention row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-3;

/// Square attention matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    size: usize,
    data: Vec<f32>,
}

impl AttentionMatrix {
    pub fn new(size: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != size * size {
            return Err(Error::ShapeMismatch {
                what: "attention matrix".into(),
                expected: size * size,
                found: data.len(),
            });
        }
        Ok(Self { size, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for row in rows {
            data.extend_from_slice(row);
        }
        Self::new(size, data)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.size + col]
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.size..(row + 1) * self.size]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size)
            .map(|r| self.row(r).iter().map(|&v| f64::from(v)).sum())
            .collect()
    }
}

/// Elementwise mean over attention heads.
pub fn average_heads(heads: &[AttentionMatrix]) -> Result<AttentionMatrix> {
    let first = heads
        .first()
        .ok_or_else(|| Error::InvalidParameter("average_heads needs at least one head".into()))?;
    if heads.len() == 1 {
        return Ok(first.clone());
    }
    let size = first.size;
    let mut acc = vec![0f64; size * size];
    for head in heads {
        if head.size != size {
            return Err(Error::ShapeMismatch {
                what: "attention head".into(),
                expected: size * size,
                found: head.size * head.size,
            });
        }
        for (a, &v) in acc.iter_mut().zip(&head.data) {
            *a += f64::from(v);
        }
    }
    let n = heads.len() as f64;
    let data = acc.into_iter().map(|v| (v / n) as f32).collect();
    Ok(AttentionMatrix { size, data })
}

/// One generated sequence: head-averaged attention per layer plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionSample {
    pub sample_id: String,
    pub model_id: String,
    pub causal: bool,
    pub label: Option<u8>,
    pub prompt_len: Option<usize>,
    layers: Vec<AttentionMatrix>,
}

impl AttentionSample {
    /// Builds a sample and checks every invariant of the dump contract.
    pub fn new(
        sample_id: impl Into<String>,
        model_id: impl Into<String>,
        causal: bool,
        layers: Vec<AttentionMatrix>,
    ) -> Result<Self> {
        let sample = Self {
            sample_id: sample_id.into(),
            model_id: model_id.into(),
            causal,
            label: None,
            prompt_len: None,
            layers,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn with_label(mut self, label: Option<u8>) -> Self {
        self.label = label;
        self
    }

    pub fn with_prompt_len(mut self, prompt_len: Option<usize>) -> Self {
        self.prompt_len = prompt_len;
        self
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn seq_len(&self) -> usize {
        self.layers.first().map_or(0, AttentionMatrix::size)
    }

    pub fn layers(&self) -> &[AttentionMatrix] {
        &self.layers
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "a sample needs at least 2 layers, found {}",
                self.layers.len()
            )));
        }
        let t = self.seq_len();
        if t < 2 {
            return Err(Error::InvalidParameter(format!(
                "a sample needs a sequence length of at least 2, found {t}"
            )));
        }
        for (idx, m) in self.layers.iter().enumerate() {
            let layer = idx + 1;
            if m.size != t {
                return Err(Error::ShapeMismatch {
                    what: format!("layer {layer}"),
                    expected: t * t,
                    found: m.data.len(),
                });
            }
            if let Some(offset) = m.data.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer, offset });
            }
            if self.causal {
                for row in 0..t {
                    if let Some(col) = (row + 1..t).find(|&c| m.get(row, c) != 0.0) {
                        return Err(Error::CausalViolation { layer, row, col });
                    }
                }
            }
            for (row, sum) in m.row_sums().into_iter().enumerate() {
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::RowSum {
                        layer,
                        row,
                        sum,
                        tolerance: ROW_SUM_TOLERANCE,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f32]]) -> AttentionMatrix {
        AttentionMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_head_is_identity() {
        let a = m(&[&[1.0, 0.0], &[0.25, 0.75]]);
        assert_eq!(average_heads(std::slice::from_ref(&a)).unwrap(), a);
    }

    #[test]
    fn two_heads_average_cellwise() {
        let a = m(&[&[1.0, 0.0], &[0.2, 0.8]]);
        let b = m(&[&[1.0, 0.0], &[0.6, 0.4]]);
        let avg = average_heads(&[a, b]).unwrap();
        assert!((avg.get(1, 0) - 0.4).abs() < 1e-7);
        assert!((avg.get(1, 1) - 0.6).abs() < 1e-7);
    }

    #[test]
    fn four_stochastic_heads_stay_stochastic() {
        let heads: Vec<_> = (0..4)
            .map(|h| {
                let x = 0.1 * h as f32;
                m(&[
                    &[1.0, 0.0, 0.0],
                    &[x, 1.0 - x, 0.0],
                    &[0.3, 0.3 - x / 2.0, 0.4 + x / 2.0],
                ])
            })
            .collect();
        for s in average_heads(&heads).unwrap().row_sums() {
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn head_shape_mismatch_is_rejected() {
        let a = m(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let b = m(&[&[1.0, 0.0, 0.0], &[0.5, 0.5, 0.0], &[0.2, 0.3, 0.5]]);
        assert!(matches!(average_heads(&[a, b]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn causal_violation_names_the_cell() {
        let ok = m(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let bad = m(&[&[0.9, 0.1], &[0.5, 0.5]]);
        let err = AttentionSample::new("s", "m", true, vec![ok, bad]).unwrap_err();
        assert!(matches!(
            err,
            Error::CausalViolation {
                layer: 2,
                row: 0,
                col: 1
            }
        ));
    }

    #[test]
    fn row_sum_violation_names_layer_and_row() {
        let ok = m(&[&[1.0, 0.0], &[0.5, 0.5]]);
        let bad = m(&[&[1.0, 0.0], &[0.5, 0.4]]);
        let err = AttentionSample::new("s", "m", true, vec![ok, bad]).unwrap_err();
        assert!(matches!(err, Error::RowSum { layer: 2, row: 1, .. }));
    }

    #[test]
    fn too_few_layers_rejected() {
        let ok = m(&[&[1.0, 0.0], &[0.5, 0.5]]);
        assert!(AttentionSample::new("s", "m", true, vec![ok]).is_err());
    }
}
