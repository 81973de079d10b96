use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("diagonalization failed: {0}")]
    Diagonalization(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("fixed point is degenerate ({count} unit eigenoperators)")]
    DegenerateFixedPoint { count: usize },

    #[error("positivity violated: minimum eigenvalue {min_eigenvalue:e}")]
    Positivity { min_eigenvalue: f64 },

    #[error("defective superoperator: eigenvector condition number {condition:e}")]
    Defective { condition: f64 },

    #[error("non-convergent mode {index}: |lambda| = {abs_lambda}, |alpha| = {abs_alpha:e}")]
    NonConvergentMode {
        index: usize,
        abs_lambda: f64,
        abs_alpha: f64,
    },

    #[error("observable undefined: {0}")]
    UndefinedObservable(String),

    #[error("regime violation: residual trion population {0:e} after one period")]
    RegimeViolation(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Json(_) => 2,
            Error::Capacity(_) => 3,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 4,
        }
    }
}
