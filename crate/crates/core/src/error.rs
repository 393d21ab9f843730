use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spin quantum number {0}: must be a non-negative multiple of 1/2")]
    InvalidSpin(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (defect {defect:.3e} exceeds tolerance {tolerance:.3e})")]
    NotHermitian { defect: f64, tolerance: f64 },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:.3e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid field grid: {0}")]
    InvalidGrid(String),

    #[error(
        "ambiguous level tracking between {b_from} G and {b_to} G (overlap {overlap:.3} < 0.5 for level {label}); halve the field step"
    )]
    AmbiguousTracking {
        b_from: f64,
        b_to: f64,
        label: usize,
        overlap: f64,
    },

    #[error("levels {i} and {f} are degenerate within {gap:.3e} MHz; slope is undefined, use the tracked finite-difference path")]
    Degenerate { i: usize, f: usize, gap: f64 },

    #[error("fit window: {0}")]
    FitWindow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Errors caused by inputs, as opposed to numerical failures.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NoConvergence { .. }
                | Error::AmbiguousTracking { .. }
                | Error::Degenerate { .. }
        )
    }
}
