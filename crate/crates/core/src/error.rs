use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied value violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),
    /// Non-finite values or a broken physical invariant during computation.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The requested target is not reachable from the initial state.
    #[error("unreachable target: {0}")]
    Reachability(String),
    /// A control system lacks something an operation requires.
    #[error("configuration error: {0}")]
    Configuration(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! bail_arg {
    ($($arg:tt)*) => {
        return Err($crate::error::Error::Argument(format!($($arg)*)))
    };
}
pub(crate) use bail_arg;
