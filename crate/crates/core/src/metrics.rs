//! Receiver-side extraction and quantitative metrics: in-band FFT
//! demodulation, error vector magnitude, Welch power spectral density, and
//! bit error rate.
//!
//! The receiver is sample-aligned by construction, so demodulation is just an
//! FFT and a bin selection: the data ride on the positive in-band subcarriers
//! k = 1 … N/2−1 (the negative bins are conjugate mirrors of a real
//! waveform). EVM compares those bins against the transmitted values as a
//! root power ratio; the Welch estimator exists to visualize where the shaped
//! quantization noise sits relative to the signal band.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::{fft_unitary, TimeSeries};

/// Error vector magnitude over a set of subcarriers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvmResult {
    /// RMS error-to-reference ratio as a fraction.
    pub evm_fraction: f64,
    /// Same value in percent (100 × fraction).
    pub evm_percent: f64,
    /// How many subcarriers entered the sums.
    pub num_subcarriers_used: usize,
}

/// Spectral estimation window. Only the Hann window is offered: its sidelobes
/// are low enough to keep the shaped noise plateau from bleeding into the
/// signal band at the segment lengths used here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Window::Hann => write!(f, "hann"),
        }
    }
}

/// One-sided Welch power spectral density estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    /// Bin center frequencies, 0 … fs/2 inclusive.
    pub freqs_hz: Vec<f64>,
    /// Power per bin in dB, normalized so the largest bin reads 0 dB.
    pub power_db: Vec<f64>,
    /// Power per bin in linear units (mean-square per bin, before the dB
    /// normalization); sums to the signal's mean-square power.
    pub power_linear: Vec<f64>,
    /// Samples per segment.
    pub segment_length: usize,
    /// Fraction of each segment shared with the next.
    pub overlap_fraction: f64,
    /// Window applied per segment.
    pub window: Window,
}

/// FFT-demodulates an oversampled frame and keeps the positive data bins.
///
/// `y` must hold exactly L·N samples; the LN-point unitary FFT is taken and
/// bins k = 1 … N/2−1 returned in ascending k. DC and Nyquist are excluded —
/// the frame builder nulls them — and negative bins are conjugates that carry
/// no extra information for a real waveform.
pub fn extract_inband(y: &TimeSeries, n: usize, l: usize) -> Result<Vec<Complex64>> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::Parameter(format!(
            "in-band frame length must be even and at least 4, got {n}"
        )));
    }
    if l < 1 {
        return Err(Error::Parameter(format!(
            "oversampling ratio must be at least 1, got {l}"
        )));
    }
    let expected = n
        .checked_mul(l)
        .ok_or_else(|| Error::Parameter(format!("{l}×{n} overflows")))?;
    if y.len() != expected {
        return Err(Error::Size(format!(
            "expected {expected} samples ({l}×{n}), got {}",
            y.len()
        )));
    }
    let spectrum = fft_unitary(y)?;
    Ok((1..n as isize / 2).map(|k| spectrum.value_at(k)).collect())
}

/// Error vector magnitude of `received` against `reference`:
/// sqrt(Σ|Y_k − X_k|² / Σ|X_k|²).
pub fn evm(received: &[Complex64], reference: &[Complex64]) -> Result<EvmResult> {
    if received.is_empty() || received.len() != reference.len() {
        return Err(Error::Size(format!(
            "EVM needs equal-length nonempty arrays, got {} and {}",
            received.len(),
            reference.len()
        )));
    }
    let reference_energy: f64 = reference.iter().map(|x| x.norm_sqr()).sum();
    if reference_energy <= 0.0 {
        return Err(Error::Parameter(
            "EVM is undefined against a zero-energy reference".into(),
        ));
    }
    let error_energy: f64 = received
        .iter()
        .zip(reference)
        .map(|(y, x)| (y - x).norm_sqr())
        .sum();
    let evm_fraction = (error_energy / reference_energy).sqrt();
    Ok(EvmResult {
        evm_fraction,
        evm_percent: 100.0 * evm_fraction,
        num_subcarriers_used: received.len(),
    })
}

/// Welch PSD estimate: windowed, overlapped periodograms averaged and folded
/// to one side.
///
/// Normalization makes the linear bins sum to the signal's mean-square power
/// (window energy divided out), after which `power_db` is shifted so the
/// largest bin is 0 dB.
pub fn psd_welch(
    x: &TimeSeries,
    segment_length: usize,
    overlap_fraction: f64,
    window: Window,
) -> Result<PsdEstimate> {
    if !segment_length.is_power_of_two() {
        return Err(Error::Parameter(format!(
            "segment length must be a power of two, got {segment_length}"
        )));
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(Error::Parameter(format!(
            "overlap fraction must lie in [0, 1), got {overlap_fraction}"
        )));
    }
    if x.len() < segment_length {
        return Err(Error::Size(format!(
            "signal of {} samples is shorter than one {segment_length}-sample segment",
            x.len()
        )));
    }
    let hop = (segment_length as f64 * (1.0 - overlap_fraction)).floor() as usize;
    let hop = hop.max(1);

    // Periodic Hann window and its energy, for the power normalization.
    let taper: Vec<f64> = match window {
        Window::Hann => (0..segment_length)
            .map(|n| {
                0.5 * (1.0
                    - (2.0 * std::f64::consts::PI * n as f64 / segment_length as f64).cos())
            })
            .collect(),
    };
    let window_energy: f64 = taper.iter().map(|w| w * w).sum();

    let mut accumulated = vec![0.0f64; segment_length];
    let mut num_segments = 0usize;
    let mut start = 0usize;
    let mut segment = vec![Complex64::new(0.0, 0.0); segment_length];
    while start + segment_length <= x.len() {
        for (n, slot) in segment.iter_mut().enumerate() {
            *slot = Complex64::new(x.samples[start + n] * taper[n], 0.0);
        }
        let spectrum = crate::ofdm::fft(&segment, false);
        for (acc, value) in accumulated.iter_mut().zip(&spectrum) {
            *acc += value.norm_sqr();
        }
        num_segments += 1;
        start += hop;
    }

    // Per-bin mean-square power: the unnormalized DFT satisfies
    // Σ_k|X_k|² = M·Σ_n|x_n w_n|², so dividing by M·Σw²·segments makes the
    // two-sided bins sum to the mean-square power of x.
    let scale = 1.0 / (segment_length as f64 * window_energy * num_segments as f64);
    let half = segment_length / 2;
    let mut power_linear = Vec::with_capacity(half + 1);
    for k in 0..=half {
        let two_sided = accumulated[k] * scale;
        // Fold the negative frequencies in; DC and Nyquist have no mirror.
        let folded = if k == 0 || k == half { two_sided } else { 2.0 * two_sided };
        power_linear.push(folded);
    }

    let peak = power_linear.iter().cloned().fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return Err(Error::Parameter(
            "PSD of an all-zero signal has no reference bin to normalize to".into(),
        ));
    }
    let power_db = power_linear.iter().map(|&p| 10.0 * (p / peak).log10()).collect();
    let freqs_hz = (0..=half)
        .map(|k| k as f64 * x.sample_rate_hz / segment_length as f64)
        .collect();
    Ok(PsdEstimate {
        freqs_hz,
        power_db,
        power_linear,
        segment_length,
        overlap_fraction,
        window,
    })
}

/// Bit error rate: Hamming distance over length.
pub fn ber(tx_bits: &[bool], rx_bits: &[bool]) -> Result<f64> {
    if tx_bits.is_empty() || tx_bits.len() != rx_bits.len() {
        return Err(Error::Size(format!(
            "BER needs equal-length nonempty bit streams, got {} and {}",
            tx_bits.len(),
            rx_bits.len()
        )));
    }
    let errors = tx_bits
        .iter()
        .zip(rx_bits)
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / tx_bits.len() as f64)
}
