use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error_estimate:e} > tolerance {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error_estimate: f64,
        tolerance: f64,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("calibration failed: estimated visibility {visibility:.5} below threshold {threshold}")]
    Calibration { visibility: f64, threshold: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code: 1 for domain, configuration and I/O problems, 2 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Quadrature { .. } | Error::Fit(_) => 2,
            _ => 1,
        }
    }
}
