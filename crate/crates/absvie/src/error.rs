use std::path::PathBuf;

/// Failures surfaced by the runner, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("ConfigParse: {0}")]
    ConfigParse(String),
    #[error("ConfigRead: {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {}", .0.name(), .0)]
    Core(#[from] absvie_core::Error),
    #[error("OutputWrite: {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for invalid input, 3 for failures during the run.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigParse(_) | RunError::ConfigRead { .. } => 2,
            RunError::Core(e) if e.is_validation() => 2,
            RunError::Core(_) | RunError::Output { .. } => 3,
        }
    }
}

pub type Result<T, E = RunError> = std::result::Result<T, E>;
