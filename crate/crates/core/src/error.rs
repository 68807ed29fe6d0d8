use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("region holds {available} valid points, {requested} requested")]
    Capacity { requested: usize, available: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("degenerate regularization path: lambda_max is zero")]
    DegeneratePath,

    #[error("simulation became unstable at step {step}")]
    Unstable { step: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Argument(_) | Error::Capacity { .. } => ErrorClass::Usage,
            Error::Format(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => ErrorClass::Data,
            Error::Numerical(_) | Error::Solver(_) | Error::DegeneratePath | Error::Unstable { .. } => {
                ErrorClass::Numerical
            }
            Error::Stage { source, .. } => source.class(),
        }
    }

    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
