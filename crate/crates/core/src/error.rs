use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Row-level schema violation in an input file. Rows are 1-based and
    /// count the header as row 1.
    #[error("{path}: row {row}, column `{column}`: {message}")]
    Schema {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("arm {arm} has no complete cases")]
    EmptyArm { arm: u8 },

    #[error("covariate cells disagree on draw count: {expected} vs {found}")]
    DrawCountMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Every proposal during warmup was rejected.
    #[error("chain {chain}: no proposal accepted during warmup; the posterior is likely broken")]
    SamplerStuck { chain: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than the invocation.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Data(_)
                | Error::EmptyArm { .. }
                | Error::Csv(_)
                | Error::Io { .. }
                | Error::DrawCountMismatch { .. }
        )
    }
}
