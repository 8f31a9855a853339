use thiserror::Error;

/// Errors produced by model construction, evaluation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("structure mismatch: {0}")]
    StructureMismatch(String),

    #[error("quadrature did not converge (estimate {estimate:e}, error estimate {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("root finding failed on bracket [{lo:e}, {hi:e}]")]
    RootFinding { lo: f64, hi: f64 },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
