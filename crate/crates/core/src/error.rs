use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("power iteration did not converge after {iterations} iterations (best estimate {estimate:e})")]
    PowerIteration { iterations: usize, estimate: f64 },

    #[error("chain of {requested} levels is too deep for dimension {dim}; maximum feasible depth is {max_depth}")]
    ChainTooDeep {
        dim: usize,
        requested: usize,
        max_depth: usize,
    },

    #[error("{path}: byte offset {offset}: {message}")]
    BinaryFormat {
        path: String,
        offset: u64,
        message: String,
    },

    #[error("{path}: line {line}: {message}")]
    TextFormat {
        path: String,
        line: u64,
        message: String,
    },

    #[error("experiment spec line {line}: {message}")]
    Spec { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub(crate) fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
