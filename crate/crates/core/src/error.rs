use thiserror::Error;

/// Errors produced by graph, model, sampling and selection operations.
#[derive(Debug, Error)]
pub enum RgmError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} out of range 1..={max}")]
    VertexOutOfRange { vertex: usize, max: usize },

    #[error("vertex sets must be pairwise disjoint: vertex {0} appears twice")]
    OverlappingSets(usize),

    #[error("graph has {actual} vertices; enumeration is capped at {cap}")]
    SizeCap { actual: usize, cap: usize },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty sample store")]
    EmptyStore,

    #[error("model space too large for HPM: {candidates} candidate edges exceeds the guard of {cap}")]
    HpmGuard { candidates: usize, cap: usize },

    #[error("degenerate truth: {0}")]
    DegenerateTruth(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RgmError>;
