use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point outside the phase space: {0}")]
    Domain(String),

    #[error("invalid symbol index {0}")]
    Index(usize),

    #[error("grid mismatch: expected {expected} cells, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("|t|·‖f‖∞ = {value} exceeds the smallness threshold {threshold}")]
    SmallnessViolation { value: f64, threshold: f64 },

    #[error("observable is not centered (mean {0:e})")]
    NotCentered(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate variance: {0:e}")]
    DegenerateVariance(f64),

    #[error("empty sample")]
    EmptySample,

    #[error("distribution function unavailable: {0}")]
    CdfUnavailable(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
