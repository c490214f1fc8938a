use thiserror::Error;

/// Errors raised by configuration, domain checks and the experiment harness.
///
/// Numeric paths inside a running trial are total; everything here is
/// detected before a run starts or while reading/writing files.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dag constraint has a cycle through hypothesis {0}")]
    Cycle(usize),

    #[error("agent {agent} reported for hypothesis {hypothesis} without registering an arrival")]
    UnregisteredAgent { hypothesis: usize, agent: usize },

    #[error("input too large for exhaustive search: k = {k}, limit {limit}")]
    TooLarge { k: usize, limit: usize },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("config parse: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
