use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("invalid scalar: {0}")]
    InvalidScalar(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("invalid tile structure: {0}")]
    InvalidStructure(String),
    #[error("invalid bipartition: {0}")]
    InvalidBipartition(String),
    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),
    #[error("invalid coefficient matrix: {0}")]
    InvalidCoefficients(String),
    #[error("unknown instance {0:?}")]
    UnknownInstance(String),
    #[error("not an orthogonal set: {0}")]
    NotOrthogonal(String),
    #[error("extra state is not tile-constant: {0}")]
    NotTileConstant(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("empty complement: {0}")]
    EmptyComplement(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: malformed JSON at line {line}, column {column}: {message}")]
    MalformedJson {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
