use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Core(#[from] maxcusum::Error),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl SimError {
    pub(crate) fn plan(msg: impl Into<String>) -> Self {
        SimError::Plan(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
