use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Invalid configuration or command line; reported before any compute.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fedsim_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("metrics: {0}")]
    Metrics(String),
}

impl SimError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        SimError::Config(msg.into())
    }

    /// Process exit code: 2 for usage/config errors, 1 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type SimResult<T> = Result<T, SimError>;
