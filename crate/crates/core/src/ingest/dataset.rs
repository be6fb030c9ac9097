use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a dataset manifest (JSON lines).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub label: Option<u8>,
}

/// Reads a JSON-lines dataset manifest. Relative paths resolve against the
/// manifest's own directory.
pub fn read_dataset_manifest(path: impl AsRef<Path>) -> Result<Vec<DatasetEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut entry: DatasetEntry = serde_json::from_str(line).map_err(|e| Error::Parse {
            what: format!("{}:{}", path.display(), lineno + 1),
            reason: e.to_string(),
        })?;
        if let Some(label) = entry.label {
            if label > 1 {
                return Err(Error::Parse {
                    what: format!("{}:{}", path.display(), lineno + 1),
                    reason: format!("label must be 0 or 1, found {label}"),
                });
            }
        }
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        entries.push(entry);
    }
    Ok(entries)
}

pub fn write_dataset_manifest(path: impl AsRef<Path>, entries: &[DatasetEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for entry in entries {
        out.push_str(&serde_json::to_string(entry).map_err(|e| Error::Parse {
            what: "dataset manifest".into(),
            reason: e.to_string(),
        })?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
