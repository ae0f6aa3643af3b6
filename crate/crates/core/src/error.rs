use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed tomography data: {0}")]
    MalformedData(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
