use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schedule evaluated outside its domain: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// Step halving exhausted without the fidelity settling.
    #[error(
        "evolution did not converge after {halvings} halvings (dt = {dt}): \
         fidelity {previous} -> {last}"
    )]
    Convergence {
        halvings: u32,
        dt: f64,
        previous: f64,
        last: f64,
    },

    #[error("diagnostic unavailable: {0}")]
    DiagnosticUnavailable(String),

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
}
