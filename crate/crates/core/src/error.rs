use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Normalized capacity is 0/0 for an all-zero channel or zero SNR.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(&'static str),

    #[error("reference element gain is zero")]
    ReferenceZero,

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("singular geometry: element {element} coincides with the transmitter")]
    SingularGeometry { element: usize },

    #[error("invalid ray: {0}")]
    InvalidRay(String),

    #[error("matched-filter reference has zero energy")]
    DegenerateReference,

    #[error("empty input")]
    EmptyInput,

    #[error("reports are not comparable: {0}")]
    IncomparableReports(String),

    #[error("non-finite value produced: {0}")]
    NonFinite(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
