use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} outside of domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("invalid capacity vector: {0}")]
    InvalidCapacity(String),

    #[error("invalid traffic vector: {0}")]
    InvalidTraffic(String),

    #[error("invalid group sequence: {0}")]
    InvalidSequence(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("malformed linear program: {0}")]
    MalformedProgram(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("symbol {symbol} not in the channel input alphabet of size {alphabet}")]
    Alphabet { symbol: u8, alphabet: usize },

    #[error("enumeration of {size} outcomes exceeds the limit of {limit}")]
    EnumerationLimit { size: u128, limit: u128 },

    #[error("database {database} is used but has zero capacity")]
    ZeroCapacity { database: usize },

    #[error("index {index} out of range 0..{bound}")]
    OutOfRange { index: usize, bound: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse channel descriptor `{0}`")]
    Parse(String),

    #[error("inconsistent plan: {0}")]
    Plan(String),
}

pub type Result<T> = std::result::Result<T, Error>;
