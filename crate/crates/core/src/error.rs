use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("side undefined: point ({}, {}, {}) lies in the panel plane", point[0], point[1], point[2])]
    SideUndefined { point: [f64; 3] },

    #[error("invalid state table: {0}")]
    InvalidTable(String),

    #[error("state index {state} out of range for a table of {num_states} states")]
    StateOutOfRange { state: usize, num_states: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),

    #[error("too many users for ZF: {users} users, {antennas} antennas")]
    TooManyUsers { users: usize, antennas: usize },

    #[error("channel Gram matrix is singular or ill-conditioned (condition number {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("search space too large: {size:e} configurations exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: f64, limit: u64 },

    #[error("schema violation at line {line}, column {column}: {message}")]
    Schema {
        message: String,
        line: usize,
        column: usize,
    },

    #[error("validation error at {path}: {reason}")]
    Validation { path: String, reason: String },

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// Coarse classification used for process exit codes and C error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Guard,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Validation => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Guard => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Validation => "validation",
            ErrorKind::Numerical => "numerical",
            ErrorKind::Guard => "guard",
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::TooManyUsers { .. }
            | Error::RankDeficient { .. }
            | Error::NonPositiveDistance(_) => ErrorKind::Numerical,
            Error::SearchSpaceTooLarge { .. } => ErrorKind::Guard,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.as_ref().to_path_buf();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn validation(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
