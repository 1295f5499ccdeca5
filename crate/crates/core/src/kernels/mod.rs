//! Dense and sparse numerical primitives.

mod dense;
mod sparse;

pub use dense::{
    cholesky_flagged, condition_number, frobenius_norm, qr_pos, singular_values, spectral_norm,
    tri_solve, CholOutcome, DenseMatrix, Side, Triangle, EPS,
};
pub use sparse::{spmv_block, BlockOperator, CsrMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has fewer rows ({rows}) than columns ({cols})")]
    TooFewRows { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("triangular factor has a zero diagonal entry at index {index}")]
    SingularFactor { index: usize },
    #[error("empty matrix")]
    Empty,
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
}
