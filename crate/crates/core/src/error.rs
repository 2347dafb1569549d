use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: u64, n: u32 },

    #[error("graph has no vertices")]
    EmptyGraph,

    #[error("graph has no edges")]
    NoEdges,

    #[error("local offset {local} does not fit in {bits} scratch bits")]
    EncodingOverflow { local: u32, bits: u32 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("execution time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("malformed partition directory {path}: {message}")]
    PartitionFormat { path: PathBuf, message: String },

    #[error("pipeline invariant violated: {0}")]
    Pipeline(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
