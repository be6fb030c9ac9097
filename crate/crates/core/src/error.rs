use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing manifest: {0}")]
    MissingManifest(PathBuf),

    #[error("malformed manifest {path}: {reason}")]
    BadManifest { path: PathBuf, reason: String },

    #[error("shape mismatch in {what}: expected {expected} values, found {found}")]
    ShapeMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite entry in layer {layer} at offset {offset}")]
    NonFinite { layer: usize, offset: usize },

    #[error("row {row} of layer {layer} sums to {sum}, outside 1 +/- {tolerance}")]
    RowSum {
        layer: usize,
        row: usize,
        sum: f64,
        tolerance: f64,
    },

    #[error("layer {layer} has a nonzero entry above the diagonal at ({row}, {col}) in a causal dump")]
    CausalViolation { layer: usize, row: usize, col: usize },

    #[error("layer {layer} has no positive off-diagonal attention weight")]
    DegenerateLayer { layer: usize },

    #[error("depth fraction {fraction} of {layers} layers keeps {kept} layer(s); at least 2 are required")]
    InsufficientDepth { fraction: f64, layers: usize, kept: usize },

    #[error("graphs disagree on vertex count: {expected} vs {found}")]
    VertexCountMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class {class} has only {count} sample(s); at least 2 are required")]
    ClassTooSmall { class: u8, count: usize },

    #[error("feature dimension mismatch: expected {expected}, found {found}{}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    DimensionMismatch {
        expected: usize,
        found: usize,
        row: Option<usize>,
    },

    #[error("transfer incompatible: training features have width {train}, test features have width {test}")]
    TransferIncompatible { train: usize, test: usize },

    #[error("sample {sample_id}: {source}")]
    Sample {
        sample_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error in {what}: {reason}")]
    Parse { what: String, reason: String },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_sample(self, sample_id: &str) -> Self {
        Error::Sample {
            sample_id: sample_id.to_string(),
            source: Box::new(self),
        }
    }

    /// The error underneath any per-sample context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Sample { source, .. } => source.root(),
            other => other,
        }
    }

    /// Usage errors are the caller's fault (bad flags or parameters); everything
    /// else is either bad data or a broken invariant.
    pub fn is_usage(&self) -> bool {
        matches!(self.root(), Error::InvalidParameter(_))
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self.root(), Error::Invariant(_))
    }
}
