use thiserror::Error;

/// Unified error type for the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("orthogonalization broke down with relative residual {residual:e} at iteration {iteration}")]
    NumericalBreakdown { iteration: usize, residual: f64 },

    #[error("non-finite value encountered in Krylov iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("zero diagonal entry at dof {index}: Jacobi smoother undefined")]
    SingularSmoother { index: usize },

    #[error("singular pivot in column {column} during LU factorization")]
    SingularMatrix { column: usize },

    #[error("coarse factorization failed (k={k}, shift={shift}, h={h}): {detail}")]
    CoarseFactorization {
        k: f64,
        shift: String,
        h: f64,
        detail: String,
    },

    #[error("average rate undefined for a zero-iteration solve")]
    UndefinedRate,

    #[error("objective returned a non-finite value at {at}")]
    NonFiniteObjective { at: f64 },

    #[error("training diverged with non-finite loss at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("dataset holds no samples for order p={p}")]
    EmptyDataset { p: usize },

    #[error("all frequencies excluded: twogrid symbol undefined on the whole sweep")]
    DegenerateSymbolSweep,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
