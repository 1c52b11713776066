//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between a config file and a finished run.
#[derive(Debug, Error)]
pub enum Error {
    /// A function was handed arguments outside its domain (dimension
    /// mismatches, non-Hermitian input, out-of-range mode numbers, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A config file could not be parsed or referenced an unknown key.
    #[error("config error: {0}")]
    Config(String),

    /// A named physical constraint on the parameters does not hold.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// The integrator produced an unphysical state and stopped.
    #[error("integration failure at t = {time} us: {reason}")]
    Integration { time: f64, reason: String },

    /// Filesystem trouble while reading configs or writing artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for validation problems
    /// (bad config or violated constraint), 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) | Error::Constraint(_) => 1,
            Error::Integration { .. } | Error::Io(_) => 2,
        }
    }
}
