use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A non-finite value appeared during optimisation or sampling. `index` is
    /// the iteration (engine) or coordinate (model sweep) where it was caught.
    #[error("numerical failure in {context} at index {index}")]
    NumericalFailure { context: String, index: usize },

    #[error("singular covariance matrix (condition number {condition:.3e})")]
    SingularMatrix { condition: f64 },

    #[error("{failed} of {total} bootstrap replicates failed (limit is 5%)")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numerical(context: impl Into<String>, index: usize) -> Self {
        Error::NumericalFailure { context: context.into(), index }
    }
}
