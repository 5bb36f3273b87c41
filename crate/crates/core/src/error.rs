use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spectral density of `{what}` is not positive definite at omega = {omega:.6} (min eigenvalue {min_eig:.3e}, max {max_eig:.3e})")]
    NotPositiveDefinite {
        what: String,
        omega: f64,
        min_eig: f64,
        max_eig: f64,
    },

    #[error("block length n = {n} must exceed twice the channel memory (m = {memory})")]
    BlockTooShort { n: usize, memory: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("noise covariance is singular: {0}")]
    SingularNoise(String),

    #[error("period too short: {0}")]
    PeriodTooShort(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at {path} (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("validation error in `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end, one per class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 2,
            Error::Parse { .. } => 3,
            Error::Validation { .. } => 4,
            Error::NotPositiveDefinite { .. } => 5,
            Error::BlockTooShort { .. } | Error::PeriodTooShort(_) => 6,
            Error::DimensionMismatch(_) => 7,
            Error::SingularNoise(_) => 8,
            Error::InvalidArgument(_) => 9,
        }
    }
}
