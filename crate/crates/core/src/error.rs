use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the pipeline.
///
/// The variants map onto the failure classes the CLI turns into exit codes:
/// configuration problems, data problems, and model/runtime problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("render error: {0}")]
    Render(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("pool exhausted for dataset {dataset}, gender {gender}: requested {requested}, available {available}")]
    PoolExhausted {
        dataset: String,
        gender: String,
        requested: usize,
        available: usize,
    },

    #[error("unscored records: {}", .0.join(", "))]
    Unscored(Vec<String>),

    #[error("cohen's kappa is undefined: chance agreement is 1")]
    UndefinedKappa,

    #[error("judge placed no probability mass on yes/no for image {0}")]
    JudgeNoMass(String),

    #[error("join error: {0}")]
    Join(String),

    #[error("empty distribution: {0}")]
    EmptyDistribution(String),

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("transport error (retriable): {0}")]
    Transport(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("training diverged at step {step}: loss {loss}")]
    Diverged { step: usize, loss: f64 },

    #[error("prune error: {0}")]
    Prune(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether retrying the same request may succeed.
    pub fn is_retriable(&self) -> bool {
        matches!(self, Error::Transport(_))
    }

    /// Configuration-class failures (as opposed to data or runtime failures).
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Catalog(_) | Error::Render(_) | Error::Capability(_)
        )
    }
}
