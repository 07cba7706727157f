use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the classifier library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A symmetric matrix could not be factorized; `pivot` is the zero-based
    /// index of the first non-positive pivot.
    #[error("matrix is not positive definite (pivot {pivot}, value {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// A numerical failure surfaced while training.
    #[error("numerical failure at outer iteration {iteration}: {source}")]
    Training {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unsupported model format version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u64, supported: u64 },

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    /// A CSV cell could not be ingested. `row` and `column` are zero-based and
    /// count data rows only (the header is not a row).
    #[error("{}: row {row}, column {column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    /// Dataset-level problems: missing label column, non-binary labels,
    /// insufficient class population, ragged rows.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("model document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical core (factorizations, training),
    /// as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. } | Error::Training { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
