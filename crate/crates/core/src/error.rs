use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent or unusable configuration (grid mismatch, bad config file, missing bounds).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The Picard iteration for one time step did not contract within `max_iter` iterations.
    #[error("Picard step diverged after {iterations} iterations (last update {last_update:e}, dt = {dt:e})")]
    StepDiverged {
        iterations: usize,
        last_update: f64,
        dt: f64,
    },

    /// The monitored norm exceeded its ceiling, or the step size could not be reduced further.
    #[error("blow-up suspected at t = {t}: norm {norm:e} (ceiling {ceiling:e}); {reason}")]
    BlowUpSuspected {
        t: f64,
        norm: f64,
        ceiling: f64,
        reason: String,
    },

    /// A Hermite expansion left a residual above the allowed limit.
    #[error("Hermite truncation residual {residual:e} exceeds {limit:e}")]
    Truncation { residual: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
