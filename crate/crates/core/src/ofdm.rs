//! DCO-OFDM baseband construction.
//!
//! Everything needed to turn bits into a real-valued OFDM waveform suitable
//! for intensity modulation: Gray-labeled QAM mapping, Hermitian-symmetric
//! subcarrier framing, unitary FFT/IFFT, frequency-domain oversampling by
//! zero padding, and peak-to-average power ratio measurement.
//!
//! Subcarriers use the centered index convention k ∈ [−M/2, M/2−1] for a
//! frame of length M. The DC bin (k = 0) and the Nyquist bin (k = −M/2) are
//! held at zero by the frame builder so the synthesized waveform is real and
//! bias-free; any DC offset is added later in the analog stage. Both
//! transforms are scaled by 1/√M, so frequency-domain comparisons between
//! transmit and receive frames need no rescaling even when the receiver runs
//! a longer FFT.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative RMS imaginary residue above which [`ifft_unitary`] rejects a
/// frame as non-Hermitian. Honest frames land many orders of magnitude below
/// this; anything near it signals a framing bug upstream.
const HERMITIAN_GUARD_RMS: f64 = 1e-9;

/// Real-valued sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Sample values.
    pub samples: Vec<f64>,
    /// Sampling rate in hertz. For a frame of FFT length M at subcarrier
    /// spacing Δf this equals M·Δf.
    pub sample_rate_hz: f64,
}

impl TimeSeries {
    /// Creates a series, checking that the sample rate is positive and finite.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Parameter(format!(
                "sample rate must be positive and finite, got {sample_rate_hz}"
            )));
        }
        Ok(TimeSeries { samples, sample_rate_hz })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the series holds no samples.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Square QAM constellation with unit average energy and Gray bit labeling.
///
/// Each axis carries half the label bits as a Gray codeword; adjacent points
/// therefore differ in exactly one bit, which is what makes nearest-point
/// decisions nearly single-bit-error events. For 4-QAM the labeling is pinned
/// to {00 → (1+j), 01 → (−1+j), 11 → (−1−j), 10 → (1−j)} / √2: the first bit
/// selects the imaginary sign, the second the real sign.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

impl QamConstellation {
    /// Builds the constellation for `order` ∈ {4, 16, 64}.
    pub fn new(order: usize) -> Result<Self> {
        let side = match order {
            4 => 2usize,
            16 => 4,
            64 => 8,
            _ => {
                return Err(Error::Parameter(format!(
                    "QAM order must be 4, 16, or 64, got {order}"
                )))
            }
        };
        let bits_per_axis = side.trailing_zeros() as usize;
        // Unit mean energy: E[|s|²] = 2·E[amp²] with amp ∈ {±1, ±3, …}.
        let scale = (3.0 / (2.0 * (side * side - 1) as f64)).sqrt();
        let mut points = Vec::with_capacity(order);
        for index in 0..order {
            let im_gray = index >> bits_per_axis;
            let re_gray = index & (side - 1);
            let re = axis_amplitude(gray_decode(re_gray), side) * scale;
            let im = axis_amplitude(gray_decode(im_gray), side) * scale;
            points.push(Complex64::new(re, im));
        }
        Ok(QamConstellation { order, bits_per_symbol: 2 * bits_per_axis, points })
    }

    /// Constellation order (number of points).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits consumed per mapped symbol, log2(order).
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Points indexed by bit label interpreted MSB-first.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }
}

/// Per-axis amplitude for a Gray-decoded level index: index 0 maps to the
/// most positive level, so label bit 0 on an axis means positive sign.
fn axis_amplitude(level: usize, side: usize) -> f64 {
    (side as f64 - 1.0) - 2.0 * level as f64
}

/// Gray code → binary (inverse of b ↦ b ^ (b >> 1)).
fn gray_decode(mut code: usize) -> usize {
    let mut binary = 0;
    while code != 0 {
        binary ^= code;
        code >>= 1;
    }
    binary
}

/// Maps a bit stream onto constellation symbols, MSB first within each label.
pub fn qam_map(bits: &[bool], constellation: &QamConstellation) -> Result<Vec<Complex64>> {
    let bps = constellation.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::Size(format!(
            "bit count {} is not a multiple of {bps} bits per symbol",
            bits.len()
        )));
    }
    Ok(bits
        .chunks(bps)
        .map(|label| {
            let mut index = 0usize;
            for &bit in label {
                index = (index << 1) | usize::from(bit);
            }
            constellation.points()[index]
        })
        .collect())
}

/// Nearest-point (minimum Euclidean distance) demapping back to bits.
///
/// Ties break toward the lowest point index, so the decision is
/// deterministic. Exact inverse of [`qam_map`] on noiseless input.
pub fn qam_demap(symbols: &[Complex64], constellation: &QamConstellation) -> Vec<bool> {
    let bps = constellation.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * bps);
    for &symbol in symbols {
        let mut best_index = 0usize;
        let mut best_dist = f64::INFINITY;
        for (index, &point) in constellation.points().iter().enumerate() {
            let dist = (symbol - point).norm_sqr();
            if dist < best_dist {
                best_dist = dist;
                best_index = index;
            }
        }
        for bit in (0..bps).rev() {
            bits.push((best_index >> bit) & 1 == 1);
        }
    }
    bits
}

/// Frequency-domain frame over centered subcarrier indices k ∈ [−M/2, M/2−1].
///
/// `inband_half_width` = N/2 marks the in-band set I = [−N/2, N/2−1]; data
/// occupy |k| ≤ N/2−1 inside it. Frames produced by [`build_hermitian_frame`]
/// and [`zero_pad_oversample`] additionally guarantee a null DC bin, a null
/// Nyquist bin, Hermitian symmetry, and zeros outside I; frames produced by
/// [`fft_unitary`] on a received signal carry whatever that signal contains.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyFrame {
    /// Bin values in centered order: element p holds subcarrier k = p − M/2.
    values: Vec<Complex64>,
    /// Half-width N/2 of the in-band set.
    inband_half_width: usize,
}

impl FrequencyFrame {
    /// Builds a frame from centered-order values.
    pub fn from_centered(values: Vec<Complex64>, inband_half_width: usize) -> Result<Self> {
        ensure_transform_len(values.len())?;
        let m = values.len();
        if inband_half_width == 0 || 2 * inband_half_width > m {
            return Err(Error::Parameter(format!(
                "in-band half width {inband_half_width} does not fit a frame of length {m}"
            )));
        }
        Ok(FrequencyFrame { values, inband_half_width })
    }

    /// Builds a frame from natural FFT bin order (DC first, negative
    /// frequencies in the upper half).
    pub fn from_natural_order(values: Vec<Complex64>, inband_half_width: usize) -> Result<Self> {
        ensure_transform_len(values.len())?;
        Self::from_centered(rotate_half(&values), inband_half_width)
    }

    /// Frame length M.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: frames have at least two bins by construction.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Half-width N/2 of the in-band set I = [−N/2, N/2−1].
    pub fn inband_half_width(&self) -> usize {
        self.inband_half_width
    }

    /// Bin values in centered order.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value at centered subcarrier index k.
    ///
    /// Panics if k lies outside [−M/2, M/2−1]; indexing a bin that does not
    /// exist is a programming error, not a data condition.
    pub fn value_at(&self, k: isize) -> Complex64 {
        let half = (self.values.len() / 2) as isize;
        assert!(
            (-half..half).contains(&k),
            "subcarrier index {k} outside [{}, {})",
            -half,
            half
        );
        self.values[(k + half) as usize]
    }

    /// Returns the same frame re-tagged with a different in-band half-width.
    ///
    /// Used on receiver-side frames, where the FFT cannot know the data
    /// bandwidth: the default tag after [`fft_unitary`] is M/2.
    pub fn with_inband_half_width(mut self, inband_half_width: usize) -> Result<Self> {
        if inband_half_width == 0 || 2 * inband_half_width > self.values.len() {
            return Err(Error::Parameter(format!(
                "in-band half width {inband_half_width} does not fit a frame of length {}",
                self.values.len()
            )));
        }
        self.inband_half_width = inband_half_width;
        Ok(self)
    }

    /// Values rotated to natural FFT bin order: natural[j] = centered[(j + M/2) mod M].
    pub fn to_natural_order(&self) -> Vec<Complex64> {
        rotate_half(&self.values)
    }
}

/// Swaps the two halves of a spectrum, converting between centered and
/// natural bin order (the operation is its own inverse for even lengths).
fn rotate_half(values: &[Complex64]) -> Vec<Complex64> {
    let half = values.len() / 2;
    let mut out = Vec::with_capacity(values.len());
    out.extend_from_slice(&values[half..]);
    out.extend_from_slice(&values[..half]);
    out
}

/// True when `m` factors entirely into 2s and 3s (the radices the FFT
/// implements).
fn is_radix23(mut m: usize) -> bool {
    if m == 0 {
        return false;
    }
    while m % 2 == 0 {
        m /= 2;
    }
    while m % 3 == 0 {
        m /= 3;
    }
    m == 1
}

/// Transform lengths must be even (the centered convention needs a Nyquist
/// bin) and factor into 2s and 3s.
pub(crate) fn ensure_transform_len(m: usize) -> Result<()> {
    if m >= 2 && m % 2 == 0 && is_radix23(m) {
        Ok(())
    } else {
        Err(Error::Size(format!(
            "transform length {m} unsupported: need an even length of the form 2^a*3^b"
        )))
    }
}

/// Unnormalized mixed-radix DFT over lengths 2^a·3^b.
///
/// `inverse = false` computes Σ x_n e^{−j2πkn/M}, `inverse = true` the
/// positive-exponent sum. Callers apply their own normalization.
pub(crate) fn fft(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let m = input.len();
    debug_assert!(is_radix23(m), "unsupported FFT length {m}");
    if m <= 1 {
        return input.to_vec();
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let twiddles: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / m as f64))
        .collect();
    let mut output = vec![Complex64::new(0.0, 0.0); m];
    fft_recurse(input, 0, 1, &mut output, &twiddles, m);
    output
}

/// Decimation-in-time recursion: transforms the strided subsequence
/// input[offset], input[offset+stride], … into `out` (whose length is the
/// current sub-transform size). Twiddles come from one full-length table;
/// the index step for a sub-transform of length n is full_len/n.
fn fft_recurse(
    input: &[Complex64],
    offset: usize,
    stride: usize,
    out: &mut [Complex64],
    twiddles: &[Complex64],
    full_len: usize,
) {
    let n = out.len();
    if n == 1 {
        out[0] = input[offset];
        return;
    }
    let tw_step = full_len / n;
    if n % 2 == 0 {
        let half = n / 2;
        {
            let (even, odd) = out.split_at_mut(half);
            fft_recurse(input, offset, stride * 2, even, twiddles, full_len);
            fft_recurse(input, offset + stride, stride * 2, odd, twiddles, full_len);
        }
        for k in 0..half {
            let t = twiddles[k * tw_step] * out[half + k];
            let a = out[k];
            out[k] = a + t;
            out[half + k] = a - t;
        }
    } else {
        // Only powers of three reach this branch (2s are peeled first).
        let third = n / 3;
        {
            let (first, rest) = out.split_at_mut(third);
            let (second, last) = rest.split_at_mut(third);
            fft_recurse(input, offset, stride * 3, first, twiddles, full_len);
            fft_recurse(input, offset + stride, stride * 3, second, twiddles, full_len);
            fft_recurse(input, offset + 2 * stride, stride * 3, last, twiddles, full_len);
        }
        let w3 = twiddles[full_len / 3];
        let w3_sq = twiddles[2 * (full_len / 3)];
        for k in 0..third {
            let a = out[k];
            let b = twiddles[k * tw_step] * out[third + k];
            let c = twiddles[2 * k * tw_step] * out[2 * third + k];
            out[k] = a + b + c;
            out[third + k] = a + w3 * b + w3_sq * c;
            out[2 * third + k] = a + w3_sq * b + w3 * c;
        }
    }
}

/// Assembles a Hermitian-symmetric frame of length `n` from the data symbols
/// for subcarriers k = 1 … N/2−1.
///
/// values[k] = data[k−1], values[−k] = conj(data[k−1]), and both the DC and
/// Nyquist bins are null, which forces the synthesized waveform to be real
/// with zero mean.
pub fn build_hermitian_frame(data: &[Complex64], n: usize) -> Result<FrequencyFrame> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::Parameter(format!(
            "frame length {n} must be a power of two >= 4"
        )));
    }
    if data.len() != n / 2 - 1 {
        return Err(Error::Size(format!(
            "expected {} data symbols for a length-{n} frame, got {}",
            n / 2 - 1,
            data.len()
        )));
    }
    let half = n / 2;
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for (i, &symbol) in data.iter().enumerate() {
        let k = i + 1;
        values[half + k] = symbol;
        values[half - k] = symbol.conj();
    }
    FrequencyFrame::from_centered(values, half)
}

/// Unitary inverse transform: x_n = (1/√M) Σ_k X_k e^{j2πkn/M} over the
/// centered index range.
///
/// The result is the real part of that sum; a guard rejects frames whose
/// imaginary residue exceeds 1e−9 RMS relative to the signal, since that can
/// only come from a non-Hermitian frame. The sample rate of the output is
/// M·`delta_f_hz`.
pub fn ifft_unitary(frame: &FrequencyFrame, delta_f_hz: f64) -> Result<TimeSeries> {
    if !(delta_f_hz.is_finite() && delta_f_hz > 0.0) {
        return Err(Error::Parameter(format!(
            "subcarrier spacing must be positive and finite, got {delta_f_hz}"
        )));
    }
    let m = frame.len();
    let time = fft(&frame.to_natural_order(), true);
    let mut sum_imag_sq = 0.0;
    let mut sum_abs_sq = 0.0;
    for z in &time {
        sum_imag_sq += z.im * z.im;
        sum_abs_sq += z.norm_sqr();
    }
    if sum_abs_sq > 0.0 {
        let imag_rms = (sum_imag_sq / sum_abs_sq).sqrt();
        if imag_rms > HERMITIAN_GUARD_RMS {
            return Err(Error::NonHermitian { imag_rms });
        }
    }
    let scale = 1.0 / (m as f64).sqrt();
    TimeSeries::new(
        time.iter().map(|z| z.re * scale).collect(),
        delta_f_hz * m as f64,
    )
}

/// Unitary forward transform: X_k = (1/√M) Σ_n x_n e^{−j2πkn/M}, exact
/// inverse of [`ifft_unitary`].
///
/// The returned frame is tagged with in-band half-width M/2 (the whole band);
/// receivers that know the data bandwidth re-tag it via
/// [`FrequencyFrame::with_inband_half_width`].
pub fn fft_unitary(x: &TimeSeries) -> Result<FrequencyFrame> {
    ensure_transform_len(x.samples.len())?;
    let m = x.samples.len();
    let input: Vec<Complex64> = x.samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    let mut spectrum = fft(&input, false);
    let scale = 1.0 / (m as f64).sqrt();
    for z in &mut spectrum {
        *z *= scale;
    }
    FrequencyFrame::from_natural_order(spectrum, m / 2)
}

/// Frequency-domain interpolation: embeds a length-N frame in the center of
/// a length-L·N frame, zeroing the out-of-band set O.
///
/// In-band values are copied bit-exactly; the in-band half-width tag is
/// carried over, so the data band stays [−N/2, N/2−1] however often the
/// frame is padded. Under unitary transforms the padded frame synthesizes
/// the same waveform sampled L times faster (time-domain energy preserved).
pub fn zero_pad_oversample(frame: &FrequencyFrame, l: usize) -> Result<FrequencyFrame> {
    if l < 1 {
        return Err(Error::Parameter(format!(
            "oversampling ratio must be >= 1, got {l}"
        )));
    }
    let n = frame.len();
    let m = n.checked_mul(l).ok_or_else(|| {
        Error::Parameter(format!("oversampled length {n}*{l} overflows"))
    })?;
    ensure_transform_len(m).map_err(|_| {
        Error::Parameter(format!(
            "oversampled length {n}*{l} = {m} must factor into 2s and 3s"
        ))
    })?;
    let mut values = vec![Complex64::new(0.0, 0.0); m];
    let start = m / 2 - n / 2;
    values[start..start + n].copy_from_slice(frame.values());
    FrequencyFrame::from_centered(values, frame.inband_half_width())
}

/// Peak-to-average power ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Papr {
    /// max(x²) / mean(x²).
    pub linear: f64,
    /// 10·log10 of the linear ratio.
    pub db: f64,
}

/// Peak-to-average power ratio of a nonzero signal: max x_n² over mean x_n².
///
/// The mean (not the sum) in the denominator makes the ratio scale- and
/// length-invariant, which is what "high PAPR" statements about OFDM refer to.
pub fn papr(x: &TimeSeries) -> Result<Papr> {
    let mut peak = 0.0f64;
    let mut sum = 0.0f64;
    for &s in &x.samples {
        let p = s * s;
        peak = peak.max(p);
        sum += p;
    }
    if x.samples.is_empty() || sum == 0.0 {
        return Err(Error::Parameter(
            "PAPR of an empty or all-zero signal is undefined".into(),
        ));
    }
    let linear = peak / (sum / x.samples.len() as f64);
    Ok(Papr { linear, db: 10.0 * linear.log10() })
}
