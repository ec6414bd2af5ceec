use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FsgdError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected} covariates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A coefficient became non-finite at the given (1-based) step index.
    #[error("divergence at step {step}: non-finite coefficient after update")]
    Divergence { step: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("replication {rep}: {source}")]
    Replication {
        rep: u64,
        #[source]
        source: Box<FsgdError>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for FsgdError {
    fn from(e: std::io::Error) -> Self {
        FsgdError::Io(e.to_string())
    }
}

impl FsgdError {
    /// Innermost error, looking through replication wrappers.
    pub fn root(&self) -> &FsgdError {
        match self {
            FsgdError::Replication { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit status: 2 for configuration, 4 for divergence, 3 for data
    /// and everything else.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            FsgdError::Config(_) => 2,
            FsgdError::Divergence { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, FsgdError>;
