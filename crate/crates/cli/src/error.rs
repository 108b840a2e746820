use heatlab_core::HeatError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("numerical guard tripped: {0}")]
    NumericalGuard(HeatError),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::ConfigInvalid(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 for bad input, 3 for numerical guards.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) | CliError::Io { .. } => 2,
            CliError::NumericalGuard(_) => 3,
        }
    }
}

impl From<HeatError> for CliError {
    fn from(e: HeatError) -> Self {
        if e.is_numerical_guard() || matches!(e, HeatError::ZeroErrorEntry) {
            CliError::NumericalGuard(e)
        } else {
            CliError::ConfigInvalid(e.to_string())
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
