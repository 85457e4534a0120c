use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("matrix is not Hermitian (max defect {defect:.3e})")]
    NonHermitian { defect: f64 },

    #[error("marginal is (nearly) pure or singular: smallest eigenvalue {min_eigenvalue:.3e}")]
    SingularMarginal { min_eigenvalue: f64 },

    #[error("measurement outcome has vanishing probability {probability:.3e}")]
    ZeroProbability { probability: f64 },

    #[error("negative semiaxis {0}")]
    NegativeSemiaxis(f64),

    #[error("survival amplitude modulus {0} exceeds 1")]
    AmplitudeOutOfRange(f64),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("degenerate denominator 1 - q^2 cos^2(theta) = {0:.3e}")]
    DegenerateDenominator(f64),

    #[error("non-physical input: {0}")]
    NonPhysical(String),

    #[error("time grids differ")]
    GridMismatch,

    #[error("rows are not sorted by time or mix several N values")]
    Unsorted,

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
