use thiserror::Error;

/// Errors produced by the core toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("bit count {bits} is not a multiple of {bits_per_symbol} bits per symbol")]
    RaggedBits { bits: usize, bits_per_symbol: usize },

    #[error("signal has zero energy")]
    ZeroEnergy,

    #[error("all singular values are zero; nothing to allocate")]
    NoActiveSubchannel,

    #[error("{routine} did not converge")]
    NonConvergence { routine: &'static str },

    #[error("bisection could not bracket target {target} bits within [{low_db} dB, {high_db} dB]")]
    Unbracketed {
        target: f64,
        low_db: f64,
        high_db: f64,
    },

    #[error("trellis needs {states} states, above the configured limit of {limit}; use the particle decoder")]
    StateSpaceTooLarge { states: u128, limit: usize },

    #[error("weights are not normalized (sum {sum})")]
    Unnormalized { sum: f64 },

    #[error(
        "pad factor {pad} too small; at least {min} is needed to resolve attenuation crossings"
    )]
    PadTooSmall { pad: usize, min: usize },

    #[error("interferer band [{low_hz} Hz, {high_hz} Hz] leaves the processing band of +/-{nyquist_hz} Hz")]
    BandOutsideProcessing {
        low_hz: f64,
        high_hz: f64,
        nyquist_hz: f64,
    },

    #[error(
        "QAM slicing unreliable: {marginal_fraction:.3} of decisions are marginal (limit 0.1)"
    )]
    UnreliableSlicing { marginal_fraction: f64 },

    #[error("spectrum never crosses the requested level")]
    NoCrossing,

    #[error("fraction {fraction} of power cannot be reached on this grid")]
    FractionUnreachable { fraction: f64 },

    #[error("malformed record: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
