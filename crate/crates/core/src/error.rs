use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Vector or matrix dimensions disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// An argument violated an operation's precondition.
    InvalidArgument(&'static str),
    /// A dense factorization met a matrix that is not positive definite.
    NotPositiveDefinite,
    /// The simplex solver failed to converge.
    LpFailure { reason: &'static str, iterations: usize },
    /// The instance has several arms tied for the best expected reward.
    NonUniqueBestArm,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NotPositiveDefinite => f.write_str("matrix is not positive definite"),
            Error::LpFailure { reason, iterations } => {
                write!(f, "linear program failed after {iterations} pivots: {reason}")
            }
            Error::NonUniqueBestArm => f.write_str("best arm is not unique"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
