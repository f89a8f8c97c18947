use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ill-formed program: {0}")]
    WellFormedness(String),

    #[error("argument `{0}` is not part of the valence")]
    Signature(String),

    #[error("output argument `{0}` is never bound by the program")]
    UnboundOutput(String),

    /// A test (`ltValue` or an `iif` condition) was reached before its argument was bound.
    #[error("argument `{0}` is used as a test before it is bound")]
    Unbound(String),

    #[error("invalid argument name `{0}`")]
    InvalidName(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("irregular light state {0:?}: exactly one light must be on")]
    IrregularState([f64; 3]),

    #[error("training diverged: {0}")]
    Training(String),

    #[error("oracle i/o: {0}")]
    OracleIo(String),

    #[error("invalid synthesis job: {0}")]
    InvalidJob(String),

    #[error("unsafe slice: `{0}` varies among the kept observables")]
    UnsafeSlice(String),

    #[error("explanation does not bind `{name}` for input {input}")]
    IncompleteExplanation { name: String, input: String },

    #[error("no consistent program found: {0}")]
    Exhausted(crate::synthesis::Exhaustion),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
