use thiserror::Error;

/// Errors raised by the geometric and bracketing pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("polytope is unbounded: {0}")]
    Unbounded(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("polytope is not simple: {0}")]
    Assumption(String),
    #[error("no Lipschitz certificate: {0}")]
    NoCertificate(String),
    #[error("Lipschitz certificate violated: {0}")]
    Certificate(String),
    #[error("coverage failure: {0}")]
    Coverage(String),
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("construction bug: {0}")]
    Construction(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
