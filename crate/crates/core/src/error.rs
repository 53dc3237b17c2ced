use thiserror::Error;

/// Errors raised by the tomography toolkit.
#[derive(Debug, Error)]
pub enum QptError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("matrix is not Hermitian (residual {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace {0} exceeds 1")]
    TraceExceeded(f64),

    #[error("vacuum state has no Stokes vector")]
    VacuumState,

    #[error("operator basis is singular")]
    SingularBasis,

    #[error("not completely positive: eigenvalue {0:e}")]
    NotCompletelyPositive(f64),

    #[error("Kraus elements exceed the identity: max eigenvalue of sum E^dag E is {0}")]
    NotTraceDecreasing(f64),

    #[error("parameter `{name}` = {value} outside {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unknown polarization label `{0}` (expected one of H, V, D, A, R, L)")]
    UnknownLabel(String),

    #[error("missing measurement settings: {0}")]
    MissingSettings(String),

    #[error("maximum-likelihood fit did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    MleNotConverged { iterations: usize, gradient_norm: f64 },

    #[error("state not usable for AAPT: operator-Schmidt coefficients {coefficients:?}")]
    NotUsableForAapt { coefficients: Vec<f64> },

    #[error("process matrix has zero trace")]
    ZeroTraceChi,

    #[error("{0}")]
    Numerical(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl QptError {
    /// True for failures of the numerics (as opposed to bad input files or usage).
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            QptError::Config { .. }
                | QptError::Io(_)
                | QptError::Json(_)
                | QptError::Csv(_)
                | QptError::UnknownLabel(_)
                | QptError::MissingSettings(_)
                | QptError::InvalidParameter { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, QptError>;
