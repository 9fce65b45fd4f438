use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumeric { row: usize, col: usize, value: String },

    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },

    #[error("label column {0} not found")]
    UnknownLabelColumn(String),

    #[error("dataset needs at least 2 distinct labels, found {0}")]
    TooFewClasses(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("empty row subset")]
    EmptySubset,

    #[error("invalid fold count k={k} for {n} examples")]
    InvalidFoldCount { k: usize, n: usize },

    #[error("invalid class pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("class {0} has no examples in the training view")]
    EmptyClass(usize),

    #[error("invalid matching problem: {0}")]
    InvalidMatching(String),

    #[error("need at least {needed} values, got {found}")]
    TooFewValues { needed: usize, found: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("zero variance input")]
    ZeroVariance,

    #[error("non-positive margin {0}")]
    NonPositiveMargin(f64),

    #[error("invalid order: {0}")]
    InvalidOrder(String),

    #[error("unknown combiner {0:?}")]
    UnknownMethod(String),

    #[error("fold {fold}: {source}")]
    InFold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("pair ({a}, {b}): {source}")]
    InPair {
        a: usize,
        b: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_fold(self, fold: usize) -> Error {
        Error::InFold {
            fold,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_pair(self, a: usize, b: usize) -> Error {
        Error::InPair {
            a,
            b,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a data problem (bad file, bad cell, bad
    /// shape) rather than a configuration or algorithmic one.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Io { .. }
            | Error::Csv(_)
            | Error::NonNumeric { .. }
            | Error::RaggedRow { .. }
            | Error::UnknownLabelColumn(_)
            | Error::TooFewClasses(_)
            | Error::InvalidDataset(_)
            | Error::EmptyClass(_)
            | Error::InvalidFoldCount { .. } => true,
            Error::InFold { source, .. } | Error::InPair { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
