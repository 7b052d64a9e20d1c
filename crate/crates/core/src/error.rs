use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps `Config` to exit code 2 and `Numerical` to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model or run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation not available for the chosen model variant.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A numerical procedure did not reach the requested status.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
