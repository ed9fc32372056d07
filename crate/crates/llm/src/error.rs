use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LlmError {
    #[error("backend '{backend}' timed out after {attempts} attempt(s)")]
    BackendTimeout { backend: String, attempts: u32 },
    #[error("backend '{backend}' unavailable: {detail}")]
    BackendUnavailable { backend: String, detail: String },
    #[error("backend '{backend}' rejected credentials: {detail}")]
    AuthFailure { backend: String, detail: String },
    #[error("no script rule matched prompt: {head:?}")]
    ScriptMiss { head: String },
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("invalid backend spec: {0}")]
    InvalidSpec(String),
    #[error("unknown backend '{0}'")]
    UnknownBackend(String),
}
