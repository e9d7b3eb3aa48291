use std::path::Path;

/// Failures surfaced by the command line, each mapped to an exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The configuration or an input file does not parse or validate.
    #[error("config error: {0}")]
    Config(String),
    /// A run or a file write failed after the configuration was accepted.
    #[error("runtime failure: {0}")]
    Runtime(String),
    /// The request is well formed but cannot be honoured (noisy or
    /// over-cap oracle, incomparable runs).
    #[error("refused: {0}")]
    Refused(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Refused(_) => 4,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }

    pub(crate) fn core(context: &str, e: frontier_core::Error) -> Self {
        CliError::Config(format!("{context}: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
