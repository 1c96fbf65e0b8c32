//! Analog front end: two-level LED drive and its low-pass response.
//!
//! The modulator's ±1 stream maps affinely onto two optical drive levels —
//! intensity modulation needs a nonnegative signal, and because the affine
//! map only moves the (null) DC subcarrier and applies one scalar gain, the
//! two-level drive is distortion-free by construction. The LED itself is
//! modeled as a first-order low-pass: it attenuates the out-of-band shaped
//! quantization noise for free but also droops across the upper data
//! subcarriers, which the receiver undoes with a one-tap equalizer built from
//! [`LedModel::response`]. Additive white Gaussian noise stands in for the
//! photodiode/receiver noise when a finite SNR is requested.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::ofdm::TimeSeries;

/// Two-level optical drive waveform with its level pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSignal {
    /// Drive samples, each equal to `level_low` or `level_high`.
    pub samples: Vec<f64>,
    /// Sample rate in Hz.
    pub sample_rate_hz: f64,
    /// Level the −1 modulator symbol maps to (the "off" intensity).
    pub level_low: f64,
    /// Level the +1 modulator symbol maps to (the "on" intensity).
    pub level_high: f64,
}

impl DriveSignal {
    /// Scalar gain of the affine map: (level_high − level_low)/2.
    ///
    /// This is the one-tap gain the receiver divides out to refer the drive
    /// back to the ±1 modulator output.
    pub fn gain(&self) -> f64 {
        0.5 * (self.level_high - self.level_low)
    }

    /// DC offset of the affine map: (level_high + level_low)/2.
    pub fn offset(&self) -> f64 {
        0.5 * (self.level_high + self.level_low)
    }
}

/// First-order low-pass LED model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedModel {
    /// 3 dB corner frequency in Hz.
    pub f3db_hz: f64,
}

impl LedModel {
    /// White-LED corner frequency used throughout the experiments.
    pub const DEFAULT_F3DB_HZ: f64 = 2.5e6;

    pub fn new(f3db_hz: f64) -> Result<Self> {
        if !(f3db_hz > 0.0 && f3db_hz.is_finite()) {
            return Err(Error::Parameter(format!(
                "LED corner frequency must be positive and finite, got {f3db_hz}"
            )));
        }
        Ok(Self { f3db_hz })
    }

    /// Prewarped bilinear coefficient c = tan(π·f3db/fs) for a given rate.
    fn warp(&self, sample_rate_hz: f64) -> Result<f64> {
        if !(sample_rate_hz > 2.0 * self.f3db_hz) {
            return Err(Error::Parameter(format!(
                "sample rate {sample_rate_hz} Hz must exceed twice the LED corner {} Hz",
                self.f3db_hz
            )));
        }
        Ok((PI * self.f3db_hz / sample_rate_hz).tan())
    }

    /// Complex frequency response of the discretized filter at `freq_hz`.
    ///
    /// This is the response of exactly the filter [`led_lowpass`] runs —
    /// H(e^{jω}) = c(1+e^{−jω}) / ((1+c) + (c−1)e^{−jω}) with prewarping
    /// c = tan(π·f3db/fs) — so dividing a received subcarrier by it undoes
    /// the droop with no model mismatch.
    pub fn response(&self, freq_hz: f64, sample_rate_hz: f64) -> Result<Complex64> {
        let c = self.warp(sample_rate_hz)?;
        let omega = 2.0 * PI * freq_hz / sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -omega);
        let one = Complex64::new(1.0, 0.0);
        Ok(c * (one + z_inv) / (Complex64::new(1.0 + c, 0.0) + (c - 1.0) * z_inv))
    }
}

impl Default for LedModel {
    fn default() -> Self {
        Self { f3db_hz: Self::DEFAULT_F3DB_HZ }
    }
}

/// Maps a ±1 modulator output onto the optical drive levels:
/// −1 ↦ `level_low`, +1 ↦ `level_high`.
///
/// The map is exactly affine — a·x + b with a = (high−low)/2,
/// b = (high+low)/2 — so apart from one scalar gain it only shifts the DC
/// subcarrier, which the frame construction holds at zero anyway.
pub fn bias_and_scale(
    output: &[f64],
    sample_rate_hz: f64,
    level_low: f64,
    level_high: f64,
) -> Result<DriveSignal> {
    if output.is_empty() {
        return Err(Error::Size("drive mapping needs a nonempty input".into()));
    }
    if !(level_low >= 0.0) {
        return Err(Error::Parameter(format!(
            "low drive level must be nonnegative for intensity modulation, got {level_low}"
        )));
    }
    if !(level_high > level_low) {
        return Err(Error::Parameter(format!(
            "drive levels must be ordered low < high, got ({level_low}, {level_high})"
        )));
    }
    if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
        return Err(Error::Parameter(format!(
            "sample rate must be positive and finite, got {sample_rate_hz}"
        )));
    }
    // Assign the levels themselves rather than evaluating gain·v + offset:
    // the drive contract is that every sample *equals* one of the two levels,
    // and the affine expression can miss them by an ulp for non-dyadic level
    // choices.
    let samples = output
        .iter()
        .map(|&v| {
            if v == 1.0 {
                Ok(level_high)
            } else if v == -1.0 {
                Ok(level_low)
            } else {
                Err(Error::Parameter(format!(
                    "drive mapping expects ±1 samples, got {v}"
                )))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DriveSignal { samples, sample_rate_hz, level_low, level_high })
}

/// Runs the drive waveform through the first-order LED low-pass.
///
/// Discretized by the bilinear transform with prewarping at the corner, so
/// the digital filter's 3 dB point lands exactly on `f3db_hz`. DC gain is 1
/// exactly: the update y_n = y_{n−1} + g·(x_n + x_{n−1} − 2·y_{n−1}) with
/// g = c/(1+c) has every constant as a fixed point. State starts at zero
/// (dark LED).
pub fn led_lowpass(drive: &DriveSignal, model: &LedModel) -> Result<TimeSeries> {
    let c = model.warp(drive.sample_rate_hz)?;
    let g = c / (1.0 + c);
    let mut x_prev = 0.0;
    let mut y = 0.0;
    let samples = drive
        .samples
        .iter()
        .map(|&x| {
            y += g * (x + x_prev - 2.0 * y);
            x_prev = x;
            y
        })
        .collect();
    TimeSeries::new(samples, drive.sample_rate_hz)
}

/// Adds white Gaussian noise at the requested SNR (dB) relative to the
/// measured signal power. `snr_db = +∞` disables the noise entirely.
pub fn awgn(x: &TimeSeries, snr_db: f64, seed: u64) -> Result<TimeSeries> {
    if snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::Parameter(format!("SNR must be finite or +inf, got {snr_db}")));
    }
    let power = x.samples.iter().map(|&s| s * s).sum::<f64>() / x.samples.len() as f64;
    if power <= 0.0 {
        return Err(Error::Parameter(
            "SNR is undefined for a zero-power signal".into(),
        ));
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let samples = x
        .samples
        .iter()
        .map(|&s| s + normal.sample(&mut rng))
        .collect();
    TimeSeries::new(samples, x.sample_rate_hz)
}
