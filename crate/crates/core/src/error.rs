use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("probabilities do not sum to one (sum + tail = {total}, tolerance {tolerance:e})")]
    NotNormalized { total: f64, tolerance: f64 },

    #[error("cluster law is truncated at {support} but k = {k} was requested with tail mass {tail:e}")]
    UnderResolvedLaw { k: usize, support: usize, tail: f64 },

    #[error("transition row {row} sums to {} (expected 1)", rounded(*.sum))]
    RowNotStochastic { row: usize, sum: f64 },

    #[error("transition matrix has a negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },

    #[error("transition matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("chain is not irreducible and aperiodic")]
    NotPrimitive,

    #[error("supplied stationary vector is not invariant (max defect {defect:e})")]
    NotStationary { defect: f64 },

    #[error("no power of the transition matrix up to {max_power} is scrambling")]
    NotScrambling { max_power: usize },

    #[error("symbol {symbol} at position {position} is outside the alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, position: usize, alphabet: usize },

    #[error("word is empty")]
    EmptyWord,

    #[error("word has zero stationary probability")]
    NullWord,

    #[error("count truncation {kmax} exceeds window {window}")]
    TruncationExceedsWindow { kmax: usize, window: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("word family is not nested at index {index}")]
    NotNested { index: usize },

    #[error("orbit hit a partition boundary at step {step}")]
    Boundary { step: usize },

    #[error(
        "orbit of length {needed} exceeds the floating-point fidelity horizon {horizon}; use symbolic digits"
    )]
    FidelityHorizonExceeded { needed: usize, horizon: usize },

    #[error("generating polynomials have mismatched truncation ({left} vs {right})")]
    TruncationMismatch { left: usize, right: usize },

    #[error("spectrum is not nonincreasing at k = {k}")]
    NonMonotoneSpectrum { k: usize },

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Twelve significant digits, enough to show a defect without float noise.
fn rounded(x: f64) -> String {
    format!("{:.12e}", x).parse::<f64>().map_or_else(|_| x.to_string(), |v| v.to_string())
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
