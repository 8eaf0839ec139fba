use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric positive definite")]
    NotSpd,

    #[error("matrix is singular beyond the jitter policy")]
    Singular,

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("permutation {index}: {source}")]
    Permutation {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Process exit code for the CLI: 1 input, 2 numeric, 3 resource cap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotSpd | Error::Singular | Error::Numeric(_) => 2,
            Error::ResourceCap(_) => 3,
            Error::Permutation { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}
