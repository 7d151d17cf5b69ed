use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied parameter (bad pair, empty sweep, q = 0, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// An operation was called on an input violating its precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// More sources requested than the virtual array can resolve.
    #[error("requested {requested} sources but the virtual array supports at most {capacity}")]
    Capacity { requested: usize, capacity: usize },

    /// RMSE requested with no usable trials.
    #[error("rmse undefined: no successful trials")]
    UndefinedRmse,

    /// Internal consistency check failed.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    /// True for errors caused by caller input rather than internal state.
    pub fn is_parameter(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Precondition(_) | Error::Capacity { .. } | Error::UndefinedRmse
        )
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
