use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid probability {value}: {context}")]
    InvalidProbability { value: f64, context: String },

    #[error("row {row} is not stochastic (sums to {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("symbol {symbol} is outside the input alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("s = {s} is outside the valid range (0, {max}]")]
    SOutOfRange { s: f64, max: f64 },

    #[error("output {output} has zero marginal but positive conditional mass")]
    ZeroMarginal { output: usize },

    #[error("objective is not finite at s = {s}")]
    NonFinite { s: f64 },

    #[error("maximizer did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
