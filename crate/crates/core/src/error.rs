//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{context}: expected dimension {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },

    #[error("time stamps must be strictly increasing: t[{index}] = {value} does not exceed t[{prev_index}] = {previous}", prev_index = index - 1)]
    NonMonotonicTimes {
        index: usize,
        previous: f64,
        value: f64,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("invalid basis function: {reason}")]
    InvalidBasisFunction { reason: String },

    #[error("invalid basis library: {reason}")]
    InvalidLibrary { reason: String },

    #[error("subset index {index} invalid for library of size {size}")]
    InvalidSubset { index: usize, size: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("every size-{k} subset has infinite cross-validation error; too few samples to validate any fit")]
    Unvalidatable { k: usize },

    #[error("identification failed for state variable {variable}: {source}")]
    GrowthFailed {
        variable: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("state became non-finite at t = {time}; integration aborted")]
    Blowup { time: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
