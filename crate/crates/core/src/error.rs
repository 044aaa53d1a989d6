use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("no observations given")]
    EmptyInput,

    #[error("standard deviation of item `{id}` must be strictly positive and finite, got {sigma}")]
    NonPositiveSigma { id: String, sigma: f64 },

    #[error("non-finite value for {what}")]
    NonFiniteValue { what: String },

    #[error("duplicate item id `{0}`")]
    DuplicateId(String),

    #[error("at least {required} Monte-Carlo samples are needed, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("at least {required} items are needed, got {got}")]
    TooFewItems { required: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical routine failed to converge: {0}")]
    ConvergenceFailure(String),

    /// The Monte-Carlo resolution (1/K) is too coarse for the requested level.
    #[error(
        "significance level {alpha:.3e} is below the Monte-Carlo resolution of K = {k} samples; \
         at least K = {required_k} samples are required"
    )]
    ResolutionExhausted { alpha: f64, k: usize, required_k: u64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn non_finite(what: impl Into<String>) -> Self {
        Error::NonFiniteValue { what: what.into() }
    }
}
