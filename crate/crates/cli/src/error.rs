use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    InsufficientHorizon(String),
    #[error("simulation diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("cannot write output: {0}")]
    Output(String),
    #[error(transparent)]
    Core(compass_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Divergence { .. } => crate::exit::DIVERGENCE,
            _ => crate::exit::CONFIG,
        }
    }
}

impl From<compass_core::Error> for CliError {
    fn from(e: compass_core::Error) -> Self {
        match e {
            compass_core::Error::Divergence { time } => CliError::Divergence { time },
            compass_core::Error::InsufficientHorizon { .. } => CliError::InsufficientHorizon(e.to_string()),
            other => CliError::Core(other),
        }
    }
}
