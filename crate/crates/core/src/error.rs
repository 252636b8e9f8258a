use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A Gram-Schmidt residual fell below the dependence tolerance.
    #[error(
        "input column {column} is linearly dependent on its predecessors (residual {residual:.3e})"
    )]
    DependentInput { column: usize, residual: f64 },

    #[error("cannot normalize the zero vector without smoothing")]
    ZeroVector,

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("geometry mismatch: expected length {expected}, got {actual}")]
    GeometryMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    /// The orthonormalized data are numerically rank deficient.
    #[error("degenerate training data: eigenvalue {lambda:.3e} below cutoff {cutoff:.3e}")]
    DegenerateData { lambda: f64, cutoff: f64 },

    #[error("degenerate spectrum: eigenvalue {lambda:.3e} below cutoff")]
    DegenerateSpectrum { lambda: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DependentInput { .. }
                | Error::ZeroVector
                | Error::NoConvergence { .. }
                | Error::DegenerateData { .. }
                | Error::DegenerateSpectrum { .. }
        )
    }

    /// True for file-system failures, including those raised inside the CSV reader.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            _ => false,
        }
    }
}
