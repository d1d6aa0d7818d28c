use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite: pivot {index} has value {value:e}")]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("singular linear system: pivot {index} is negligible")]
    Singular { index: usize },

    #[error("unsupported structure: {0}")]
    Capability(String),

    #[error(
        "inner solver exhausted {iters} iterations with bound {bound:e} above target {target:e}"
    )]
    InnerExhausted {
        iters: usize,
        bound: f64,
        target: f64,
        best: Vec<f64>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("iteration {k}: {source}")]
    AtIteration { k: usize, source: Box<Error> },

    #[error("tolerance {target:e} not reached after {iters} iterations (best {achieved:e})")]
    NotConverged {
        iters: usize,
        achieved: f64,
        target: f64,
        /// Best iterate found, flattened by the caller.
        best: Vec<f64>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn at(self, k: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                k,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            found,
        })
    }
}
