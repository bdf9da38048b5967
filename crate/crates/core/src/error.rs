use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("invalid term: {0}")]
    InvalidTerm(String),

    #[error("amplitude {0} is not a finite real number")]
    NonRealAmplitude(f64),

    #[error("matrix has odd dimension {0}")]
    OddDimension(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not antisymmetric: max |A + A^T| = {0:e}")]
    NotAntisymmetric(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not physical: largest singular value exceeds 1 by {0:e}")]
    Unphysical(f64),

    #[error("state is not pure: max |Γ² + 1| = {0:e}")]
    NotPure(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operator dimension {dim} exceeds the configured cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("Fock space oracle limited to {cap} modes, got {modes}")]
    FockCapExceeded { modes: usize, cap: usize },

    #[error("parent Hamiltonian ground space is degenerate (gap {0:e})")]
    DegenerateGroundSpace(f64),

    #[error("eigensolver failed: {message} (matrix dumped to {dump:?})")]
    Eigensolver { message: String, dump: Option<PathBuf> },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("momentum ({0}, {1}) is not on the grid")]
    NotOnGrid(usize, usize),

    #[error("malformed matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}
