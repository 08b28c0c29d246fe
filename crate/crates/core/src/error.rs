use thiserror::Error;

/// Errors raised by the estimators, the simulation harness and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("degenerate auxiliary variable: {0}")]
    DegenerateAux(String),
    #[error("degenerate population: {0}")]
    Degenerate(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) => 2,
            Error::Size(_) | Error::Data(_) | Error::Io(_) | Error::Csv(_) => 3,
            Error::DegenerateSample(_)
            | Error::DegenerateAux(_)
            | Error::Degenerate(_)
            | Error::Numerical(_) => 4,
        }
    }
}
