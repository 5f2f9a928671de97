use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// Two margins (or a margin and zero) were equal where a strict order is required.
    #[error("tie: {0}")]
    Tie(String),
    /// The requested size is outside what the algorithm supports.
    #[error("unsupported size: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Domain(format!($($arg)*))
    };
}
pub(crate) use domain_err;
