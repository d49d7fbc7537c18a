use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A formula was evaluated at (or within 1e-12 of) a singular point.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("eigensolver did not converge after {iterations} iterations (best residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("matrix has no nonzero entries; spectrum is degenerate")]
    DegenerateSpectrum,

    #[error("instance too large: {0}")]
    Size(String),

    #[error("parameter estimation failed: {0}")]
    Estimation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user-supplied parameters or input
    /// files rather than by I/O or numerical failure.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::LengthMismatch { .. }
                | Error::VertexOutOfRange { .. }
                | Error::Size(_)
                | Error::Parse { .. }
        )
    }
}
