use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("operator is not a rank-one projector (deviation {0:.3e})")]
    NotProjector(f64),

    #[error("map is not CPTP: {0}")]
    NotCptp(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown name `{name}`; valid names: {valid}")]
    UnknownName { name: String, valid: String },

    #[error("did not converge: {0}")]
    NotConverged(String),

    #[error("eigensolver failed to converge")]
    NoConvergence,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
