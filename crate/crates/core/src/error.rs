use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("digraph is not strongly connected")]
    NotStronglyConnected,

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("least-squares fit failed: {0}")]
    Fit(String),

    #[error("non-finite {what} for agent {agent} at t={t}")]
    NonFinite {
        what: &'static str,
        agent: usize,
        t: u64,
    },

    #[error("offline minimizer failed at t={t}: {reason}")]
    Minimizer { t: u64, reason: String },

    #[error("malformed edge list at line {line}: {reason}")]
    EdgeList { line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Whether this failure stems from rejected input rather than a runtime fault.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::NotStronglyConnected
                | Error::EdgeList { .. }
                | Error::Config(_)
        )
    }
}
