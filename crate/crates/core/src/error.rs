//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no alphabetic character survives preprocessing{}", fmt_row(.row))]
    EmptyName { row: Option<usize> },
    #[error("bad CSV schema: {0}")]
    Schema(String),
    #[error("unknown class label {label:?} at row {row}")]
    Label { label: String, row: usize },
    #[error("split ratios must be positive and sum to 1 (got {0:?})")]
    Ratio([f64; 3]),
    #[error("class {0} has no examples")]
    EmptyClass(usize),
    #[error("bad synthetic profile: {0}")]
    BadProfile(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("solver did not converge within {epochs} epochs (residual {residual:.3e})")]
    NotConverged { epochs: usize, residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("name of length {len} exceeds max_len {max_len}")]
    TooLong { len: usize, max_len: usize },
    #[error("character {0:?} is not in the model alphabet")]
    UnknownChar(char),
    #[error("training diverged: loss is not finite at epoch {0}")]
    Diverged(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("no part of the name matches the reference list")]
    NoMatch,
    #[error("unsupported model file version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn fmt_row(row: &Option<usize>) -> String {
    match row {
        Some(r) => format!(" (row {r})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
