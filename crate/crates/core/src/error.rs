use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("tangent vectors are based at different points")]
    BaseMismatch,

    #[error("manifold mismatch: {0}")]
    ManifoldMismatch(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("curve is not closed")]
    OpenCurve,

    #[error("basis mode n={n} is not resolved on a grid of N={grid}; need N >= {required}")]
    Resolution { n: usize, grid: usize, required: usize },

    #[error("exponential map guard violated: step norm {norm} exceeds limit {limit}")]
    InjectivityGuard { norm: f64, limit: f64 },

    #[error("negative time t={0}")]
    NegativeTime(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("form is not closed (max |curl| coefficient {0:e})")]
    NotClosed(f64),

    #[error("not an eigenform: {0}")]
    NotEigen(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
