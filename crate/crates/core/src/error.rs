use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("size guard: {0}")]
    TooLarge(String),
    #[error("LP infeasible")]
    LpInfeasible,
    #[error("internal error: {0}")]
    Internal(String),
    #[error("infeasible: x(delta(v)) < 1 at terminal {terminal}")]
    NegativeDegree { terminal: usize },
    #[error("invalid splitting set: {0}")]
    InvalidSplittingSet(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("tight sets do not cover U")]
    TightSetsDoNotCover,
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::Invariant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
