use thiserror::Error;

/// Errors raised by the library.
///
/// The CLI maps [`Error::Resource`] to exit status 3 and every other
/// variant to exit status 2.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("zero vector not allowed: {0}")]
    ZeroVector(String),

    #[error("negative coordinate in {0}")]
    NegativeCoordinate(String),

    #[error("degenerate cone: {0}")]
    DegenerateCone(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("resource bound reached: {0}")]
    Resource(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
