use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("store error: {0}")]
    Store(#[from] rusqlite::Error),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rate unavailable for {0}")]
    RateUnavailable(chrono::NaiveDate),

    #[error("duplicate rate date {0}")]
    DuplicateRateDate(chrono::NaiveDate),

    #[error("no wallets")]
    NoWallets,

    #[error("invalid k = {k} for {m} points")]
    InvalidK { k: usize, m: usize },

    #[error("degenerate clustering: {0}")]
    Degenerate(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("rules error at line {line}: {message}")]
    Rules { line: usize, message: String },

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
