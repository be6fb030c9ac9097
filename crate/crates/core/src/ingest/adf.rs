//! Attention dump format: one directory per sample holding `manifest.json`
//! and `layer_000.bin` .. `layer_{L-1:03}.bin`. Each layer file is raw
//! little-endian f32, row-major, heads outermost.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{average_heads, AttentionMatrix, AttentionSample};
use crate::error::{Error, Result};

pub const ADF_FORMAT_VERSION: u32 = 1;
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdfManifest {
    pub format_version: u32,
    pub sample_id: String,
    pub model_id: String,
    pub num_layers: usize,
    pub num_heads: usize,
    pub seq_len: usize,
    pub dtype: String,
    pub causal: bool,
    pub label: Option<u8>,
    pub prompt_len: Option<usize>,
}

impl AdfManifest {
    fn check(&self, path: &Path) -> Result<()> {
        let bad = |reason: String| Error::BadManifest {
            path: path.to_path_buf(),
            reason,
        };
        if self.format_version != ADF_FORMAT_VERSION {
            return Err(bad(format!("unsupported format_version {}", self.format_version)));
        }
        if self.dtype != "f32" {
            return Err(bad(format!("dtype must be \"f32\", found {:?}", self.dtype)));
        }
        if self.num_heads == 0 {
            return Err(bad("num_heads must be at least 1".into()));
        }
        if self.num_layers < 2 {
            return Err(bad(format!("num_layers must be at least 2, found {}", self.num_layers)));
        }
        if self.seq_len < 2 {
            return Err(bad(format!("seq_len must be at least 2, found {}", self.seq_len)));
        }
        if let Some(label) = self.label {
            if label > 1 {
                return Err(bad(format!("label must be 0, 1 or null, found {label}")));
            }
        }
        Ok(())
    }
}

fn layer_file_name(layer: usize) -> String {
    format!("layer_{layer:03}.bin")
}

/// Reads and fully validates one dump directory.
pub fn load_sample(dir: impl AsRef<Path>) -> Result<AttentionSample> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(Error::MissingManifest(manifest_path));
    }
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: AdfManifest = serde_json::from_str(&text).map_err(|e| Error::BadManifest {
        path: manifest_path.clone(),
        reason: e.to_string(),
    })?;
    manifest.check(&manifest_path)?;

    let t = manifest.seq_len;
    let per_head = t * t;
    let expected = manifest.num_heads * per_head;
    let mut layers = Vec::with_capacity(manifest.num_layers);
    for layer in 0..manifest.num_layers {
        let path = dir.join(layer_file_name(layer));
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        if bytes.len() != expected * 4 {
            return Err(Error::ShapeMismatch {
                what: layer_file_name(layer),
                expected,
                found: bytes.len() / 4,
            });
        }
        let values: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if let Some(offset) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                layer: layer + 1,
                offset,
            });
        }
        let heads = values
            .chunks_exact(per_head)
            .map(|h| AttentionMatrix::new(t, h.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        layers.push(average_heads(&heads)?);
    }

    Ok(
        AttentionSample::new(manifest.sample_id, manifest.model_id, manifest.causal, layers)?
            .with_label(manifest.label)
            .with_prompt_len(manifest.prompt_len),
    )
}

/// Writes a raw dump: `layers[l]` must hold `num_heads * seq_len^2` values.
/// No validation beyond the shape law, so tests can produce corrupt dumps.
pub fn write_dump(dir: impl AsRef<Path>, manifest: &AdfManifest, layers: &[Vec<f32>]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let expected = manifest.num_heads * manifest.seq_len * manifest.seq_len;
    for (idx, layer) in layers.iter().enumerate() {
        if layer.len() != expected {
            return Err(Error::ShapeMismatch {
                what: layer_file_name(idx),
                expected,
                found: layer.len(),
            });
        }
        let mut bytes = Vec::with_capacity(layer.len() * 4);
        for v in layer {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let path = dir.join(layer_file_name(idx));
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).map_err(|e| Error::Parse {
        what: "manifest".into(),
        reason: e.to_string(),
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

/// Writes a head-averaged sample as a dump directory.
pub fn write_sample(dir: impl AsRef<Path>, sample: &AttentionSample) -> Result<()> {
    let manifest = AdfManifest {
        format_version: ADF_FORMAT_VERSION,
        sample_id: sample.sample_id.clone(),
        model_id: sample.model_id.clone(),
        num_layers: sample.num_layers(),
        num_heads: 1,
        seq_len: sample.seq_len(),
        dtype: "f32".into(),
        causal: sample.causal,
        label: sample.label,
        prompt_len: sample.prompt_len,
    };
    let layers: Vec<Vec<f32>> = sample.layers().iter().map(|m| m.as_slice().to_vec()).collect();
    write_dump(dir, &manifest, &layers)
}
