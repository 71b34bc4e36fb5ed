use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument error: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid too coarse: {0}")]
    Refinement(String),

    #[error("empty domain: {0}")]
    EmptyDomain(String),

    #[error("precondition violated: {message} ({} offending nodes)", nodes.len())]
    Precondition { message: String, nodes: Vec<usize> },

    #[error("hypothesis violation: lim f(R,..,R) = {limit} must exceed max psi = {max_psi}")]
    HypothesisViolation { limit: f64, max_psi: f64 },

    #[error("epsilon schedule infeasible: {message}; achievable stages j in {achievable_from}..{achievable_to}")]
    Schedule {
        message: String,
        achievable_from: usize,
        achievable_to: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
