use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("hierarchy document contains no edges")]
    EmptyDocument,

    #[error("line {line}: expected `child<TAB>parent`, got {content:?}")]
    MalformedLine { line: usize, content: String },

    #[error("duplicate edge {child} -> {parent}")]
    DuplicateEdge { child: String, parent: String },

    #[error("hierarchy contains a directed cycle through {node}")]
    CycleDetected { node: String },

    #[error("hierarchy has no root node")]
    NoRoot,

    #[error("hierarchy has multiple roots: {}", roots.join(", "))]
    MultipleRoots { roots: Vec<String> },

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("k = {k} exceeds the number of leaves ({leaves})")]
    KTooLarge { k: usize, leaves: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("example {id} is labeled with inner node {label}, expected a leaf")]
    NotLeafLabeled { id: String, label: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("step {step} is outside the schedule of {total} steps")]
    StepOutOfRange { step: usize, total: usize },

    #[error("dataset is empty after preprocessing")]
    EmptyDataset,

    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("validation set is empty")]
    EmptyValidationSet,

    #[error("checkpoint does not match hierarchy: {0}")]
    CheckpointMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyDocument => "EmptyDocument",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::DuplicateEdge { .. } => "DuplicateEdge",
            Error::CycleDetected { .. } => "CycleDetected",
            Error::NoRoot => "NoRoot",
            Error::MultipleRoots { .. } => "MultipleRoots",
            Error::UnknownNode(_) => "UnknownNode",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::InvalidParameters(_) => "InvalidParameters",
            Error::NotLeafLabeled { .. } => "NotLeafLabeled",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::StepOutOfRange { .. } => "StepOutOfRange",
            Error::EmptyDataset => "EmptyDataset",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptyValidationSet => "EmptyValidationSet",
            Error::CheckpointMismatch(_) => "CheckpointMismatch",
            Error::Io { .. } => "IoError",
            Error::Json { .. } => "FormatError",
            Error::Csv(_) => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
