use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("all logits are -inf; no entry can be selected")]
    NoSelectableEntry,

    #[error("invalid temperature {0}: must be > 0 (use tempered_softmax for the zero-temperature limit)")]
    InvalidTemperature(f64),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("invalid simplex vector: {0}")]
    InvalidSimplex(String),

    #[error("non-finite value in {context}: {detail}")]
    NonFinite { context: String, detail: String },

    #[error("evidence has zero probability under the joint table")]
    ImpossibleEvidence,

    #[error("feature {0} is already observed")]
    AlreadyObserved(usize),

    #[error("every feature group is already selected")]
    AllSelected,

    #[error("operation requires a {expected} table or task")]
    TaskMismatch { expected: &'static str },

    #[error("enumeration bound exceeded: {0} configurations (limit 2^20)")]
    EnumerationBound(u128),

    #[error("invalid joint table: {0}")]
    InvalidTable(String),

    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("csv error at row {row}, column '{column}': {message}")]
    CsvCell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid group spec: {0}")]
    InvalidGroups(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("policy contract violated: {0}")]
    PolicyContract(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("unknown synthetic distribution '{0}'")]
    UnknownDistribution(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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
}
