use thiserror::Error;

/// Errors produced by the decomposition toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero quaternion")]
    DivisionByZero,
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("singular matrix")]
    Singular,
    #[error("singular operation matrix")]
    SingularOp,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("eigensolver failed to converge")]
    ConvergenceFailure,
    #[error("family is not simultaneously diagonalizable")]
    NotSimultaneouslyDiagonalizable,
    #[error("quadratic solver exceeded its restart budget")]
    SolveBudgetExceeded,
    #[error("left-eigenvalue search exceeded its budget")]
    SearchBudgetExceeded,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("algorithm failure: {0}")]
    AlgorithmFailure(String),
    #[error("unsupported tensor shape {0}x{1}x{2}")]
    UnsupportedShape(usize, usize, usize),
}

pub type Result<T> = std::result::Result<T, Error>;
