use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuntimeError {
    #[error("unknown {kind} '{id}'")]
    UnknownId { kind: &'static str, id: String },
    #[error("{kind} '{id}' already exists")]
    DuplicateId { kind: &'static str, id: String },
    #[error("dangling reference: {0}")]
    DanglingReference(String),
    #[error("validation failed: {}", .0.join("; "))]
    ValidationFailed(Vec<String>),
    #[error("disturbance '{id}' covers {available} steps but the horizon needs {needed}")]
    HorizonUncovered { id: String, available: usize, needed: usize },
    #[error("environment not initialized")]
    Uninitialized,
    #[error("non-finite state at step {step}: {detail}")]
    NonFiniteState { step: usize, detail: String },
    #[error("unknown run '{0}'")]
    UnknownRun(String),
    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("no active configuration")]
    NoActiveConfig,
    #[error("io error: {0}")]
    Io(String),
}

impl RuntimeError {
    pub(crate) fn unknown(kind: &'static str, id: &str) -> Self {
        RuntimeError::UnknownId { kind, id: id.to_string() }
    }

    pub(crate) fn duplicate(kind: &'static str, id: &str) -> Self {
        RuntimeError::DuplicateId { kind, id: id.to_string() }
    }
}

impl From<std::io::Error> for RuntimeError {
    fn from(e: std::io::Error) -> Self {
        RuntimeError::Io(e.to_string())
    }
}
