use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config or input files. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// The harness itself failed. Exit code 2.
    #[error("{0}")]
    Fault(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Fault(_) => 2,
        }
    }
}
