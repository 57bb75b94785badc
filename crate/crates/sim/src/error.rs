use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("filter failed at step {step}: {source}")]
    Filter {
        step: usize,
        #[source]
        source: starslam_core::Error,
    },
    #[error(transparent)]
    Core(#[from] starslam_core::Error),
    #[error("run log line {line}: {message}")]
    RunLog { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn scenario(msg: impl Into<String>) -> SimError {
    SimError::InvalidScenario(msg.into())
}
