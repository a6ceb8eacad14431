use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Netpbm parse failures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnmError {
    #[error("not a binary {expected} file")]
    WrongMagic { expected: &'static str },
    #[error("malformed header: {0}")]
    MalformedHeader(&'static str),
    #[error("unsupported maxval {0}")]
    UnsupportedMaxval(u32),
    #[error("truncated: expected {expected} payload bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {source}", path.display())]
    Pnm {
        path: PathBuf,
        #[source]
        source: PnmError,
    },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] itnn_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Error {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit status for this error class. 2 is left to argument
    /// parsing.
    pub fn exit_code(&self) -> u8 {
        use itnn_core::Error as E;
        match self {
            Error::Io { .. } => 3,
            Error::Pnm { .. } | Error::Format { .. } | Error::Csv { .. } | Error::Json { .. } => 4,
            Error::Config(_) => 6,
            Error::Core(e) => match e {
                E::InvalidConfig(_) => 6,
                E::InvalidCurve(_) | E::NoPsnrOverlap | E::EmptyRecords | E::UnsupportedBlockSize(_) => 8,
                E::Iteration { .. }
                | E::EmptyCorpus
                | E::EmptyTrainingSet
                | E::Diverged { .. }
                | E::DuplicateImageId(_)
                | E::MissingDistortion(_) => 7,
                _ => 5,
            },
        }
    }
}
