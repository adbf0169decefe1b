use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid interval ({lo}, {hi}): {reason}")]
    InvalidInterval { lo: f64, hi: f64, reason: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid delay coefficient: {0}")]
    InvalidCoefficient(String),

    #[error("history does not cover t = {t} (available [{start}, {end}])")]
    HistoryGap { t: f64, start: f64, end: f64 },

    #[error("initial history incompatible with v0 at s = 0 (max deviation {deviation:e})")]
    IncompatibleHistory { deviation: f64 },

    #[error("no exponential decay: spectral abscissa {abscissa:e} is not negative")]
    NoExponentialDecay { abscissa: f64 },

    #[error("semigroup tail bound not reached up to t = {horizon}")]
    TailNotReached { horizon: f64 },

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
}

pub type Result<T> = core::result::Result<T, Error>;
