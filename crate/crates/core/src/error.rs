use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue} below -{tolerance}")]
    NotPsd { eigenvalue: f64, tolerance: f64 },

    #[error("degenerate eigengap: lambda_k = {lambda_k} is not above lambda_k+1 = {lambda_k_plus_1}")]
    DegenerateGap { lambda_k: f64, lambda_k_plus_1: f64 },

    #[error("rate fit undefined: {0}")]
    UndefinedFit(String),

    #[error("internal numerical failure: {0}")]
    Internal(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
