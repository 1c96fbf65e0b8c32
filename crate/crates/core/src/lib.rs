//! Simulation of a DCO-OFDM visible-light link driven through a one-bit
//! delta-sigma modulator.
//!
//! The chain under study: QAM data on Hermitian-symmetric subcarriers is
//! synthesized into a real waveform ([`ofdm`]), oversampled in the frequency
//! domain, converted to a two-level sequence by a noise-shaping one-bit
//! delta-sigma modulator ([`delta_sigma`]), mapped to a nonnegative LED drive
//! and low-pass filtered by the LED ([`frontend`]), then demodulated and
//! quantified — EVM, PSD, PAPR, BER — on the receive side ([`metrics`]).
//! [`link`] wires the whole pipeline together behind a seeded, reproducible
//! experiment runner configured by [`config`]; the `vlcdsm` binary exposes it
//! on the command line.

pub mod config;
pub mod delta_sigma;
pub mod error;
pub mod frontend;
pub mod link;
pub mod metrics;
pub mod ofdm;
