use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is rank deficient (column {column} vanished after projection)")]
    RankDeficient { column: usize },

    #[error("matrix is not positive definite (pivot {pivot} is {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not symmetric (entry ({row}, {col}) differs from its transpose)")]
    NotSymmetric { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid outlier rule: {0}")]
    InvalidRule(String),

    #[error("index evaluation returned {value} at basis {basis:?}")]
    IndexEvaluation { value: f64, basis: Vec<f64> },

    #[error("column {column} has zero spread (MAD = 0)")]
    ZeroSpread { column: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("row {row} is a zero vector")]
    ZeroVector { row: usize },

    #[error("invalid number of clusters k = {k} for {m} rows")]
    InvalidK { k: usize, m: usize },

    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidProbability(_) => "InvalidProbability",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::InvalidRule(_) => "InvalidRule",
            Error::IndexEvaluation { .. } => "IndexEvaluationError",
            Error::ZeroSpread { .. } => "ZeroSpread",
            Error::DegenerateData(_) => "DegenerateData",
            Error::ZeroVector { .. } => "ZeroVector",
            Error::InvalidK { .. } => "InvalidK",
            Error::EmptyCluster { .. } => "EmptyCluster",
            Error::Parse { .. } => "ParseError",
            Error::Io { .. } => "IoError",
            Error::Csv(_) => "CsvError",
        }
    }
}
