//! Error type shared by every stage of the link.
//!
//! The variants separate the three ways a call can fail: the caller handed us
//! data with inconsistent dimensions, the caller asked for a parameter value
//! outside its working range, or an iterative design routine could not meet
//! its target. `NonHermitian` is its own variant because it is the one
//! numerical (rather than structural) failure the transmitter can detect: a
//! frequency frame that should have produced a real waveform did not.

use std::fmt;

/// Error returned by the simulator's building blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Input buffers had the wrong length or mismatched dimensions.
    Size(String),
    /// A parameter was outside its documented range.
    Parameter(String),
    /// An iterative design routine failed to converge to its target.
    Synthesis(String),
    /// A frequency frame expected to be conjugate-symmetric produced a
    /// time-domain signal with non-negligible imaginary content.
    NonHermitian {
        /// RMS of the imaginary part relative to the RMS of the real part.
        imag_rms: f64,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Size(msg) => write!(f, "size mismatch: {msg}"),
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Synthesis(msg) => write!(f, "synthesis failed: {msg}"),
            Error::NonHermitian { imag_rms } => write!(
                f,
                "frequency frame is not conjugate-symmetric \
                 (relative imaginary RMS {imag_rms:.3e})"
            ),
        }
    }
}

impl std::error::Error for Error {}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
