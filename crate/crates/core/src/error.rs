use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library.
///
/// The variants fall into three families that the CLI maps onto exit codes:
/// argument/usage problems, data problems, and numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("data error at row {row}, column '{column}': {message}")]
    Data {
        row: usize,
        column: String,
        message: String,
    },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("singular covariance matrix (condition estimate {condition:.3e}): {detail}")]
    Singular { condition: f64, detail: String },

    #[error("degenerate moment series: {0}")]
    DegenerateMoment(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

/// Broad error family, used to select a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_) | Error::Argument(_) | Error::Unsupported(_) => ErrorClass::Usage,
            Error::InsufficientData(_)
            | Error::Data { .. }
            | Error::MissingColumn(_)
            | Error::Io(_)
            | Error::Serde(_) => ErrorClass::Data,
            Error::Numerical(_) | Error::Singular { .. } | Error::DegenerateMoment(_) => {
                ErrorClass::Numerical
            }
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
