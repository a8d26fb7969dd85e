use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// yᵀs ≤ 0: the Broyden update would lose positive definiteness.
    #[error("curvature condition violated: yᵀs = {0:e}")]
    Curvature(f64),

    #[error("positive definiteness lost: {0}")]
    PdLoss(String),

    /// dᵀAd ≤ 0 along a search direction of a quadratic.
    #[error("non-convex direction: dᵀAd = {0:e}")]
    NonConvexDirection(f64),

    /// Arnoldi breakdown: the starting vector spans an invariant subspace.
    #[error("Krylov breakdown: h21 = {h21:e}")]
    KrylovBreakdown { h21: f64 },

    /// The vector that should become a fixed eigenvector is numerically zero.
    #[error("degenerate eigenvector column")]
    DegenerateColumn,

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("parse error at byte offset {offset}: {msg}")]
    Parse { offset: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
