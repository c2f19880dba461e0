use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alphabet size must be at least 1")]
    EmptyAlphabet,

    #[error("symbol {symbol} at position {position} is outside an alphabet of size {size}")]
    SymbolOutOfRange {
        symbol: usize,
        position: usize,
        size: usize,
    },

    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid probability {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },

    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The requested (mode, alpha, threshold) combination lies outside the
    /// regime where the decoding rule and its exponents are defined.
    #[error("{0}")]
    Regime(String),

    #[error("codebook construction failed: {0}")]
    Construction(String),

    #[error("malformed codebook data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
