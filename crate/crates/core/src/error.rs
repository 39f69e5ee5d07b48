use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("antenna count mismatch: expected {expected}, got {actual}")]
    AntennaMismatch { expected: usize, actual: usize },

    #[error("antenna count must be at least 1")]
    NoAntennas,

    #[error("transmit power must be finite and non-negative, got {0}")]
    InvalidPower(f64),

    #[error("transmit power must be positive, got {0}")]
    NonPositivePower(f64),

    #[error("rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),

    #[error("Erlang shape must be at least 1")]
    ZeroShape,

    #[error("argument must be finite and non-negative, got {0}")]
    NegativeArgument(f64),

    #[error("relay index {index} out of range for {relays} relays")]
    RelayIndex { index: usize, relays: usize },

    #[error("subset enumeration limited to {max} relays, partition has {relays}")]
    TooManyRelays { relays: usize, max: usize },

    #[error("slope fit needs at least two points with distinct SNR, got {0}")]
    TooFewPoints(usize),

    #[error("slope fit requires strictly positive probabilities, got {0}")]
    NonPositiveProbability(f64),

    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),

    #[error("scheme `{0}` registered twice")]
    DuplicateScheme(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
