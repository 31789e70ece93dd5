use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, dimensions or grids that do not fit together.
    #[error("structural error: {0}")]
    Structure(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A work guard (enumeration size, direct summation size) was exceeded.
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    #[error("numerical blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structure(msg: impl Into<String>) -> Self {
        Error::Structure(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
