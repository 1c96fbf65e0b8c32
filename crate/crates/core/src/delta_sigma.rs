//! One-bit delta-sigma modulation with synthesized noise transfer functions.
//!
//! The modulator re-quantizes an oversampled waveform to ±1 while shaping the
//! quantization error away from the signal band: V(z) = U(z) + NTF(z)·Q(z),
//! where Q is the per-sample quantizer error. The loop is realized in
//! error-feedback form — the quantizer input is corrected by F(z) = NTF(z) − 1
//! applied to past errors — which makes the signal transfer exactly unity, so
//! received subcarriers can be compared against transmitted ones with no gain
//! term.
//!
//! NTF synthesis puts poles on a digital Butterworth low-pass set whose
//! cutoff is tuned by bisection until the peak out-of-band gain matches the
//! requested `h_inf`. Larger `h_inf` suppresses in-band noise harder but
//! destabilizes the one-bit loop sooner; 1.5 is the customary safe default.
//! Zeros either sit all at DC (z = 1), giving an f^order noise floor, or —
//! when the signal band edge is known — spread across the band at
//! Gauss-Legendre nodes, the placement that minimizes the integrated in-band
//! |NTF|² and buys roughly 13 dB at order 4 over the DC stack.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ofdm::{FrequencyFrame, TimeSeries};

/// Frequency-grid resolution used for peak-gain evaluation during synthesis.
pub const DEFAULT_GAIN_GRID: usize = 8192;

/// Noise transfer function as a zero/pole set with its realized peak gain.
#[derive(Debug, Clone, PartialEq)]
pub struct NtfDesign {
    order: usize,
    zeros: Vec<Complex64>,
    poles: Vec<Complex64>,
    h_inf_target: f64,
    h_inf_realized: f64,
}

impl NtfDesign {
    /// Filter order (number of zeros = number of poles).
    pub fn order(&self) -> usize {
        self.order
    }

    /// Zeros, on the unit circle.
    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    /// Poles, strictly inside the unit circle, in conjugate pairs.
    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    /// Requested peak out-of-band gain.
    pub fn h_inf_target(&self) -> f64 {
        self.h_inf_target
    }

    /// Peak gain actually measured on the synthesis grid.
    pub fn h_inf_realized(&self) -> f64 {
        self.h_inf_realized
    }

    /// Monic numerator coefficients in descending powers of z (length order+1).
    pub fn numerator(&self) -> Vec<f64> {
        real_poly_from_roots(&self.zeros)
    }

    /// Monic denominator coefficients in descending powers of z.
    pub fn denominator(&self) -> Vec<f64> {
        real_poly_from_roots(&self.poles)
    }
}

/// Expands ∏(z − r_i) into real coefficients, descending powers, monic.
///
/// Roots must come in conjugate pairs (or be real); the tiny imaginary
/// residue from rounding is dropped.
fn real_poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &root in roots {
        coeffs.push(Complex64::new(0.0, 0.0));
        for i in (1..coeffs.len()).rev() {
            let prev = coeffs[i - 1];
            coeffs[i] -= root * prev;
        }
    }
    coeffs
        .iter()
        .map(|c| {
            debug_assert!(
                c.im.abs() <= 1e-9 * c.re.abs().max(1.0),
                "polynomial from conjugate-paired roots should be real, got {c}"
            );
            c.re
        })
        .collect()
}

/// Digital Butterworth low-pass poles at normalized cutoff `fc`
/// (cycles/sample): the analog prototype on the circle of radius
/// Ωc = 2·tan(π·fc) mapped through the bilinear transform z = (2+s)/(2−s).
///
/// Conjugate symmetry is exact by construction: the upper-half poles are
/// computed and mirrored, and an odd-order middle pole is built as a real
/// number rather than trusting sin(π) to vanish.
fn butterworth_digital_poles(order: usize, fc: f64) -> Vec<Complex64> {
    let wc = 2.0 * (PI * fc).tan();
    let two = Complex64::new(2.0, 0.0);
    let mut poles = vec![Complex64::new(0.0, 0.0); order];
    for k in 0..order / 2 {
        let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
        let s = Complex64::from_polar(wc, theta);
        let z = (two + s) / (two - s);
        poles[k] = z;
        poles[order - 1 - k] = z.conj();
    }
    if order % 2 == 1 {
        poles[order / 2] = Complex64::new((2.0 - wc) / (2.0 + wc), 0.0);
    }
    poles
}

/// |∏(z − zero) / ∏(z − pole)| on the unit circle at angle `omega`.
fn gain_at_omega(zeros: &[Complex64], poles: &[Complex64], omega: f64) -> f64 {
    let z = Complex64::from_polar(1.0, omega);
    let mut numerator = 1.0;
    for &zero in zeros {
        numerator *= (z - zero).norm();
    }
    let mut denominator = 1.0;
    for &pole in poles {
        denominator *= (z - pole).norm();
    }
    numerator / denominator
}

/// Peak gain over the half-circle grid ω = π·m/grid_points, m = 0..=grid_points.
fn max_gain_on_grid(zeros: &[Complex64], poles: &[Complex64], grid_points: usize) -> f64 {
    let mut peak = 0.0f64;
    for m in 0..=grid_points {
        let omega = PI * m as f64 / grid_points as f64;
        peak = peak.max(gain_at_omega(zeros, poles, omega));
    }
    peak
}

/// Roots of the Legendre polynomial P_n on [−1, 1], ascending.
///
/// Newton's method from the classical cosine initial guesses; converges to
/// machine precision in a handful of steps for the orders used here.
fn legendre_nodes(n: usize) -> Vec<f64> {
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_{n-1} by the three-term recurrence.
            let mut p_curr = x;
            let mut p_prev = 1.0;
            for k in 1..n {
                let p_next =
                    ((2 * k + 1) as f64 * x * p_curr - k as f64 * p_prev) / (k + 1) as f64;
                p_prev = p_curr;
                p_curr = p_next;
            }
            let derivative = n as f64 * (x * p_curr - p_prev) / (x * x - 1.0);
            let step = p_curr / derivative;
            x -= step;
            if step.abs() <= 1e-15 {
                break;
            }
        }
        nodes.push(x);
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes
}

/// Unit-circle zero set for a band whose upper edge is `band_edge`
/// cycles/sample: conjugate pairs at angles ±2π·band_edge·x for each positive
/// Legendre node x, plus a zero at z = 1 for odd orders. `band_edge` = 0
/// collapses the whole set to z = 1.
fn unit_circle_zeros(order: usize, band_edge: f64) -> Vec<Complex64> {
    let mut zeros = Vec::with_capacity(order);
    if order % 2 == 1 {
        zeros.push(Complex64::new(1.0, 0.0));
    }
    let nodes = legendre_nodes(order);
    for &node in nodes.iter().filter(|&&x| x > 1e-12) {
        let zero = Complex64::from_polar(1.0, 2.0 * PI * band_edge * node);
        zeros.push(zero);
        zeros.push(zero.conj());
    }
    zeros
}

fn validate_synthesis_params(order: usize, h_inf: f64, grid_points: usize) -> Result<()> {
    if order < 1 || order > 8 {
        return Err(Error::Parameter(format!(
            "NTF order must be between 1 and 8, got {order}"
        )));
    }
    if !(h_inf > 1.0 && h_inf <= 4.0) {
        return Err(Error::Parameter(format!(
            "peak NTF gain must lie in (1, 4], got {h_inf}"
        )));
    }
    if grid_points < 2 {
        return Err(Error::Parameter(format!(
            "gain grid needs at least 2 points, got {grid_points}"
        )));
    }
    Ok(())
}

/// Synthesizes an NTF of the given order whose peak unit-circle gain equals
/// `h_inf` within 1e−6 relative.
///
/// Zeros go to z = 1 (multiplicity = order) so the in-band noise floor falls
/// as f^order; poles are the Butterworth set found by bisecting the cutoff —
/// peak gain grows monotonically with cutoff, so the root is bracketed on
/// (1e−4, 0.49) unless `h_inf` sits outside what Butterworth poles can reach.
pub fn synthesize_ntf(order: usize, h_inf: f64, grid_points: usize) -> Result<NtfDesign> {
    validate_synthesis_params(order, h_inf, grid_points)?;
    let zeros = vec![Complex64::new(1.0, 0.0); order];
    synthesize_with_zeros(order, h_inf, zeros, grid_points)
}

/// Synthesizes an NTF with zeros spread across the signal band
/// (Gauss-Legendre placement) instead of stacked at DC.
///
/// `band_edge` is the top of the band to protect, in cycles/sample — for an
/// oversampling ratio L the signal occupies [0, 1/(2L)]. Spreading notches
/// the in-band response at several frequencies, which lowers the integrated
/// in-band noise by ~13 dB at order 4 compared to all-DC zeros and is what
/// makes low oversampling ratios usable; `band_edge` = 0 reproduces the
/// all-DC design.
///
/// A wide spread puts a floor on the reachable peak gain. When `h_inf` sits
/// below that floor the synthesis returns the floor design instead of
/// failing: `h_inf_realized` then exceeds `h_inf_target`, which is how the
/// caller (and the sweep tables) can tell the gain target was not met.
pub fn synthesize_ntf_for_band(
    order: usize,
    h_inf: f64,
    band_edge: f64,
    grid_points: usize,
) -> Result<NtfDesign> {
    validate_synthesis_params(order, h_inf, grid_points)?;
    if !(band_edge >= 0.0 && band_edge < 0.5) {
        return Err(Error::Parameter(format!(
            "band edge must lie in [0, 0.5) cycles/sample, got {band_edge}"
        )));
    }
    let zeros = unit_circle_zeros(order, band_edge);
    synthesize_with_zeros(order, h_inf, zeros, grid_points)
}

fn synthesize_with_zeros(
    order: usize,
    h_inf: f64,
    zeros: Vec<Complex64>,
    grid_points: usize,
) -> Result<NtfDesign> {
    let peak_for = |fc: f64| {
        max_gain_on_grid(&zeros, &butterworth_digital_poles(order, fc), grid_points)
    };

    // Peak gain is quasi-convex in the cutoff: the branch set by the near-DC
    // pole cluster falls as the cutoff grows (and blows up toward fc → 0 when
    // the zeros sit off DC and stop canceling those poles), while the branch
    // set by the poles approaching z = −1 rises toward Nyquist. Scan for the
    // valley first, then bisect on the rising branch.
    const SCAN_POINTS: usize = 200;
    let lo_end = 1e-4f64;
    let hi_end = 0.49;
    let mut fc_at_min = lo_end;
    let mut min_gain = f64::INFINITY;
    for m in 0..=SCAN_POINTS {
        let fc = lo_end * (hi_end / lo_end).powf(m as f64 / SCAN_POINTS as f64);
        let gain = peak_for(fc);
        if gain < min_gain {
            min_gain = gain;
            fc_at_min = fc;
        }
    }
    let gain_hi = peak_for(hi_end);
    if h_inf >= gain_hi {
        return Err(Error::Synthesis(format!(
            "peak gain {h_inf} for order {order} is above the reachable \
             range ({min_gain:.6}, {gain_hi:.6})"
        )));
    }
    if min_gain >= h_inf {
        // The zero placement puts a floor on the reachable peak gain: a wide
        // in-band spread leaves no cutoff this tame. Return the floor design
        // (valley cutoff, to scan resolution) instead of failing — callers
        // read the shortfall off h_inf_realized vs h_inf_target. This is the
        // standard low-oversampling outcome for banded zeros.
        let poles = butterworth_digital_poles(order, fc_at_min);
        ensure_poles_inside(&poles)?;
        return Ok(NtfDesign {
            order,
            zeros,
            poles,
            h_inf_target: h_inf,
            h_inf_realized: min_gain,
        });
    }
    let mut lo = fc_at_min;
    let mut hi = hi_end;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if peak_for(mid) < h_inf {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 {
            break;
        }
    }

    let fc = 0.5 * (lo + hi);
    let poles = butterworth_digital_poles(order, fc);
    let h_inf_realized = max_gain_on_grid(&zeros, &poles, grid_points);
    if (h_inf_realized - h_inf).abs() > 1e-6 * h_inf {
        return Err(Error::Synthesis(format!(
            "bisection stalled at peak gain {h_inf_realized}, target {h_inf}"
        )));
    }
    ensure_poles_inside(&poles)?;
    Ok(NtfDesign { order, zeros, poles, h_inf_target: h_inf, h_inf_realized })
}

fn ensure_poles_inside(poles: &[Complex64]) -> Result<()> {
    for &p in poles {
        if !(p.norm() < 1.0 - 1e-9) {
            return Err(Error::Synthesis(format!(
                "synthesized pole {p} too close to the unit circle"
            )));
        }
    }
    Ok(())
}

/// |NTF(e^{j2πf})| for normalized frequency f in cycles/sample (data band
/// lives in [0, 0.5]).
pub fn ntf_gain(design: &NtfDesign, normalized_freq: f64) -> f64 {
    gain_at_omega(&design.zeros, &design.poles, 2.0 * PI * normalized_freq)
}

/// Strictly causal loop filter F(z) = NTF(z) − 1.
///
/// Coefficients are stored in powers of z^{-1}: `numerator[i]` multiplies
/// z^{-i}. `numerator[0]` is exactly 0 (both NTF polynomials are monic, so
/// the constant terms cancel), which is what makes the feedback loop
/// computable sample by sample; `denominator[0]` is exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackFilter {
    /// Numerator of F in z^{-1} powers; index 0 is always 0.
    pub numerator: Vec<f64>,
    /// Denominator of F in z^{-1} powers; index 0 is always 1.
    pub denominator: Vec<f64>,
}

/// Derives the error-feedback filter F = NTF − 1 from a design.
///
/// With both polynomials monic of equal degree, (B − A)/A has a numerator
/// whose leading coefficient cancels to exactly zero — strict causality falls
/// out of the arithmetic rather than being imposed.
pub fn feedback_coefficients(design: &NtfDesign) -> FeedbackFilter {
    let b = design.numerator();
    let a = design.denominator();
    let numerator = b.iter().zip(a.iter()).map(|(bi, ai)| bi - ai).collect();
    FeedbackFilter { numerator, denominator: a }
}

/// One modulator pass: the ±1 output, the error sequence that produced it,
/// and the loop-health diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorRun {
    /// Two-level output; every sample is exactly +1.0 or −1.0.
    pub output: Vec<f64>,
    /// Per-sample quantizer error q_n = v_n − w_n (with the saturated w when
    /// the sample clipped). Filtering this through the NTF reconstructs
    /// output − input.
    pub quantization_error: Vec<f64>,
    /// Samples whose quantizer input exceeded the clip limit.
    pub clip_count: usize,
    /// Largest |quantizer input| seen before saturation.
    pub peak_quantizer_input: f64,
    /// True when the clipped fraction stayed at or below the configured limit.
    pub stable: bool,
}

enum Quantizer {
    OneBit { clip_limit: f64 },
    Bypass,
}

/// Runs the one-bit loop over `input`, saturating the quantizer input at
/// ±`clip_limit`.
///
/// Per sample: w = u + F(past errors); v = sign(w) with sign(0) = +1;
/// q = v − w. Instability never raises an error — it is reported through
/// `stable`/`clip_count` so sweeps can record divergent configurations.
/// Callers are expected to scale the input peak well below 1.
pub fn modulate(
    design: &NtfDesign,
    input: &TimeSeries,
    clip_limit: f64,
    clip_fraction_limit: f64,
) -> Result<ModulatorRun> {
    if !(clip_limit.is_finite() && clip_limit > 1.0) {
        return Err(Error::Parameter(format!(
            "clip limit must be finite and > 1, got {clip_limit}"
        )));
    }
    if !(0.0..=1.0).contains(&clip_fraction_limit) {
        return Err(Error::Parameter(format!(
            "clip fraction limit must lie in [0, 1], got {clip_fraction_limit}"
        )));
    }
    Ok(run_loop(
        design,
        input,
        Quantizer::OneBit { clip_limit },
        clip_fraction_limit,
    ))
}

/// Runs the loop with the quantizer shorted (v := w, q := 0): the output
/// equals the input bit-exactly, demonstrating the unity signal transfer.
/// Diagnostic fields report a clean run.
pub fn modulate_bypassed(design: &NtfDesign, input: &TimeSeries) -> ModulatorRun {
    run_loop(design, input, Quantizer::Bypass, 1.0)
}

fn run_loop(
    design: &NtfDesign,
    input: &TimeSeries,
    quantizer: Quantizer,
    clip_fraction_limit: f64,
) -> ModulatorRun {
    let filter = feedback_coefficients(design);
    let b = &filter.numerator; // b[0] == 0
    let a = &filter.denominator; // a[0] == 1
    let order = design.order();

    // Transposed direct form II: `state[0]` always holds the filter output
    // for the *next* sample, so the feedback is ready before the current
    // error is known — the loop stays causal.
    let mut state = vec![0.0f64; order];
    let mut output = Vec::with_capacity(input.samples.len());
    let mut quantization_error = Vec::with_capacity(input.samples.len());
    let mut clip_count = 0usize;
    let mut peak_quantizer_input = 0.0f64;

    for &u in &input.samples {
        let feedback = state[0];
        let w_raw = u + feedback;
        peak_quantizer_input = peak_quantizer_input.max(w_raw.abs());
        let (v, q) = match quantizer {
            Quantizer::OneBit { clip_limit } => {
                let w = w_raw.clamp(-clip_limit, clip_limit);
                if w != w_raw {
                    clip_count += 1;
                }
                let v = if w >= 0.0 { 1.0 } else { -1.0 };
                (v, v - w)
            }
            Quantizer::Bypass => (w_raw, 0.0),
        };
        for i in 0..order {
            let next = if i + 1 < order { state[i + 1] } else { 0.0 };
            state[i] = next + b[i + 1] * q - a[i + 1] * feedback;
        }
        output.push(v);
        quantization_error.push(q);
    }

    let clip_fraction = if output.is_empty() {
        0.0
    } else {
        clip_count as f64 / output.len() as f64
    };
    ModulatorRun {
        output,
        quantization_error,
        clip_count,
        peak_quantizer_input,
        stable: clip_fraction <= clip_fraction_limit,
    }
}

/// General IIR filter y = (b/a)·x with zero initial state, transposed direct
/// form II. `a[0]` must be 1 (all filters here are monic by construction).
pub fn iir_filter(b: &[f64], a: &[f64], x: &[f64]) -> Vec<f64> {
    assert!(!b.is_empty() && !a.is_empty(), "filter needs coefficients");
    assert!(a[0] == 1.0, "denominator must be monic, got a[0] = {}", a[0]);
    let taps = b.len().max(a.len()) - 1;
    let coeff = |c: &[f64], i: usize| c.get(i).copied().unwrap_or(0.0);
    let mut state = vec![0.0f64; taps];
    let mut y = Vec::with_capacity(x.len());
    for &xn in x {
        let yn = b[0] * xn + state.first().copied().unwrap_or(0.0);
        for i in 0..taps {
            let next = if i + 1 < taps { state[i + 1] } else { 0.0 };
            state[i] = next + coeff(b, i + 1) * xn - coeff(a, i + 1) * yn;
        }
        y.push(yn);
    }
    y
}

/// Per-subcarrier split of a received frame against the transmitted one:
/// the residual on the in-band set and the raw received values outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct InbandDecomposition {
    /// Y_k − X_k for k ∈ I = [−N/2, N/2−1], ascending k. For a modulator
    /// output this is the shaped noise NTF_k·Q_k landing in the band.
    pub inband_error: Vec<Complex64>,
    /// Y_k for k outside I, ascending k (the shaped out-of-band noise).
    pub outband: Vec<Complex64>,
}

/// Splits received bins into in-band error and out-of-band content.
///
/// Both frames must have the same length and the same in-band partition.
pub fn inband_decomposition(
    x_freq: &FrequencyFrame,
    y_freq: &FrequencyFrame,
) -> Result<InbandDecomposition> {
    if x_freq.len() != y_freq.len() {
        return Err(Error::Size(format!(
            "frame lengths differ: {} vs {}",
            x_freq.len(),
            y_freq.len()
        )));
    }
    if x_freq.inband_half_width() != y_freq.inband_half_width() {
        return Err(Error::Size(format!(
            "in-band partitions differ: half width {} vs {}",
            x_freq.inband_half_width(),
            y_freq.inband_half_width()
        )));
    }
    let half_m = (x_freq.len() / 2) as isize;
    let half_n = x_freq.inband_half_width() as isize;
    let mut inband_error = Vec::with_capacity(2 * half_n as usize);
    let mut outband = Vec::with_capacity(x_freq.len() - 2 * half_n as usize);
    for k in -half_m..half_m {
        if (-half_n..half_n).contains(&k) {
            inband_error.push(y_freq.value_at(k) - x_freq.value_at(k));
        } else {
            outband.push(y_freq.value_at(k));
        }
    }
    Ok(InbandDecomposition { inband_error, outband })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{
        build_hermitian_frame, fft_unitary, ifft_unitary, qam_map, zero_pad_oversample,
        QamConstellation,
    };
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn first_order_designs_match_closed_form() {
        // For NTF = (z−1)/(z−p) with 0 ≤ p < 1 the peak sits at z = −1 and
        // equals 2/(1+p), so the pole solving h_inf is p = 2/h_inf − 1.
        let design = synthesize_ntf(1, 1.5, DEFAULT_GAIN_GRID).unwrap();
        assert_eq!(design.order(), 1);
        assert_eq!(design.zeros(), &[Complex64::new(1.0, 0.0)]);
        let pole = design.poles()[0];
        assert!(
            (pole - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-9,
            "pole {pole} should be 1/3"
        );
        assert!((design.h_inf_realized() - 1.5).abs() <= 1.5e-6);
        assert!((ntf_gain(&design, 0.5) - 1.5).abs() < 1e-6);

        let design = synthesize_ntf(1, 2.0, DEFAULT_GAIN_GRID).unwrap();
        assert!(
            design.poles()[0].norm() < 1e-9,
            "pole {} should be at the origin",
            design.poles()[0]
        );
    }

    #[test]
    fn synthesized_designs_respect_the_gain_bound() {
        for order in 1..=8usize {
            for h_inf in [1.2, 1.5, 2.0, 3.0] {
                let design = synthesize_ntf(order, h_inf, DEFAULT_GAIN_GRID)
                    .unwrap_or_else(|e| panic!("order {order}, h_inf {h_inf}: {e}"));
                assert!(
                    (design.h_inf_realized() - h_inf).abs() <= 1e-6 * h_inf,
                    "order {order}: realized {} vs target {h_inf}",
                    design.h_inf_realized()
                );
                for m in 0..=DEFAULT_GAIN_GRID {
                    let f = 0.5 * m as f64 / DEFAULT_GAIN_GRID as f64;
                    let g = ntf_gain(&design, f);
                    assert!(
                        g <= h_inf * (1.0 + 1e-6),
                        "order {order} h_inf {h_inf}: gain {g} at f={f}"
                    );
                }
                for &p in design.poles() {
                    assert!(p.norm() < 1.0 - 1e-9, "pole {p} outside stability margin");
                }
                for k in 0..order {
                    let mirror = design.poles()[order - 1 - k];
                    assert_eq!(
                        design.poles()[k].conj(),
                        mirror,
                        "order {order}: poles not in conjugate pairs"
                    );
                }
                // NTF(∞) = 1: both polynomials monic.
                assert_eq!(design.numerator()[0], 1.0);
                assert_eq!(design.denominator()[0], 1.0);
            }
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let a = synthesize_ntf(4, 1.5, DEFAULT_GAIN_GRID).unwrap();
        let b = synthesize_ntf(4, 1.5, DEFAULT_GAIN_GRID).unwrap();
        for (pa, pb) in a.poles().iter().zip(b.poles()) {
            assert_eq!(pa.re.to_bits(), pb.re.to_bits());
            assert_eq!(pa.im.to_bits(), pb.im.to_bits());
        }
        assert_eq!(a.h_inf_realized().to_bits(), b.h_inf_realized().to_bits());
    }

    #[test]
    fn synthesis_rejects_bad_parameters() {
        assert!(matches!(synthesize_ntf(0, 1.5, 8192), Err(Error::Parameter(_))));
        assert!(matches!(synthesize_ntf(9, 1.5, 8192), Err(Error::Parameter(_))));
        assert!(matches!(synthesize_ntf(4, 1.0, 8192), Err(Error::Parameter(_))));
        assert!(matches!(synthesize_ntf(4, 4.5, 8192), Err(Error::Parameter(_))));
        assert!(matches!(synthesize_ntf(4, f64::NAN, 8192), Err(Error::Parameter(_))));
        assert!(matches!(synthesize_ntf(4, 1.5, 1), Err(Error::Parameter(_))));
        // A peak gain this close to 1 sits below what the shortest scanned
        // cutoff reaches; the floor design comes back with the shortfall on
        // record rather than an exact match.
        let floored = synthesize_ntf(1, 1.0 + 1e-6, 8192).unwrap();
        assert!(floored.h_inf_realized() > floored.h_inf_target());
        assert!(floored.h_inf_realized() < 1.001);
    }

    #[test]
    fn ntf_gain_is_exactly_zero_at_dc() {
        for order in [1usize, 3, 5] {
            let design = synthesize_ntf(order, 1.5, DEFAULT_GAIN_GRID).unwrap();
            assert_eq!(ntf_gain(&design, 0.0), 0.0);
        }
    }

    #[test]
    fn ntf_gain_monotone_for_low_orders() {
        for order in 1..=4usize {
            let design = synthesize_ntf(order, 1.5, DEFAULT_GAIN_GRID).unwrap();
            let mut prev = 0.0f64;
            for m in 0..=8192usize {
                let g = ntf_gain(&design, 0.5 * m as f64 / 8192.0);
                assert!(
                    g >= prev - 1e-12 * prev.max(1.0),
                    "order {order}: gain dips at grid point {m}: {g} < {prev}"
                );
                prev = g;
            }
        }
    }

    #[test]
    fn feedback_filter_closed_forms() {
        // NTF = (z−1)/z ⇒ F = −z^{-1}.
        let design = synthesize_ntf(1, 2.0, DEFAULT_GAIN_GRID).unwrap();
        let f = feedback_coefficients(&design);
        assert_eq!(f.numerator[0], 0.0);
        assert!((f.numerator[1] + 1.0).abs() < 1e-9);
        assert_eq!(f.denominator[0], 1.0);
        assert!(f.denominator[1].abs() < 1e-9);

        // NTF = (z−1)/(z−1/3) ⇒ F = (−2/3)z^{-1} / (1 − (1/3)z^{-1}).
        let design = synthesize_ntf(1, 1.5, DEFAULT_GAIN_GRID).unwrap();
        let f = feedback_coefficients(&design);
        assert_eq!(f.numerator[0], 0.0);
        assert!((f.numerator[1] + 2.0 / 3.0).abs() < 1e-9);
        assert!((f.denominator[1] + 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn feedback_filter_is_strictly_causal_for_all_orders() {
        for order in 1..=8usize {
            let design = synthesize_ntf(order, 1.5, DEFAULT_GAIN_GRID).unwrap();
            let f = feedback_coefficients(&design);
            assert_eq!(f.numerator[0], 0.0, "order {order}: F(∞) must vanish");
            assert_eq!(f.numerator.len(), order + 1);
            assert_eq!(f.denominator.len(), order + 1);
        }
    }

    #[test]
    fn first_order_loop_alternates_on_zero_input() {
        let design = synthesize_ntf(1, 2.0, DEFAULT_GAIN_GRID).unwrap();
        let input = TimeSeries::new(vec![0.0; 64], 1.0).unwrap();
        let run = modulate(&design, &input, 4.0, 1e-3).unwrap();
        for (n, &v) in run.output.iter().enumerate() {
            let want = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_eq!(v, want, "sample {n}");
        }
        let mean: f64 = run.output.iter().sum::<f64>() / 64.0;
        assert!(mean.abs() <= 1.0 / 64.0);
        assert_eq!(run.clip_count, 0);
        assert!(run.stable);
    }

    #[test]
    fn first_order_loop_tracks_dc() {
        // Hand simulation of NTF=(z−1)/z on constant 0.5 from zero state
        // gives the period-4 pattern [1, 1, −1, 1]: mean exactly 0.5. The
        // pattern rides on a quantizer input that lands exactly on 0 every
        // fourth step, so the design is built with its pole literally at 0 —
        // the synthesized pole is within 1e−6 but that residue is enough to
        // flip the sign(0)=+1 tie-break.
        let design = NtfDesign {
            order: 1,
            zeros: vec![Complex64::new(1.0, 0.0)],
            poles: vec![Complex64::new(0.0, 0.0)],
            h_inf_target: 2.0,
            h_inf_realized: 2.0,
        };
        let input = TimeSeries::new(vec![0.5; 10_000], 1.0).unwrap();
        let run = modulate(&design, &input, 4.0, 1e-3).unwrap();
        assert_eq!(&run.output[..8], &[1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, 1.0]);
        let mean: f64 = run.output.iter().sum::<f64>() / run.output.len() as f64;
        assert!((mean - 0.5).abs() <= 0.01, "mean {mean}");

        // The synthesized version of the same design tracks the same mean.
        let synthesized = synthesize_ntf(1, 2.0, DEFAULT_GAIN_GRID).unwrap();
        let run = modulate(&synthesized, &input, 4.0, 1e-3).unwrap();
        let mean: f64 = run.output.iter().sum::<f64>() / run.output.len() as f64;
        assert!((mean - 0.5).abs() <= 0.01, "synthesized mean {mean}");
    }

    #[test]
    fn output_is_exactly_two_level() {
        let mut rng = test_rng(3);
        for order in 1..=5usize {
            let design = synthesize_ntf(order, 1.5, DEFAULT_GAIN_GRID).unwrap();
            let input = TimeSeries::new(
                (0..2048).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                1.0,
            )
            .unwrap();
            let run = modulate(&design, &input, 4.0, 1e-3).unwrap();
            assert!(
                run.output.iter().all(|&v| v == 1.0 || v == -1.0),
                "order {order}: non-two-level sample"
            );
            assert_eq!(run.output.len(), input.samples.len());
            assert_eq!(run.quantization_error.len(), input.samples.len());
        }
    }

    #[test]
    fn bypassed_loop_is_bit_exact_identity() {
        let mut rng = test_rng(5);
        for order in 1..=5usize {
            let design = synthesize_ntf(order, 1.5, DEFAULT_GAIN_GRID).unwrap();
            let samples: Vec<f64> = (0..512).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let input = TimeSeries::new(samples.clone(), 1.0).unwrap();
            let run = modulate_bypassed(&design, &input);
            for (n, (&got, &want)) in run.output.iter().zip(samples.iter()).enumerate() {
                assert_eq!(got.to_bits(), want.to_bits(), "order {order} sample {n}");
            }
            assert!(run.quantization_error.iter().all(|&q| q == 0.0));
            assert_eq!(run.clip_count, 0);
            assert!(run.stable);
        }
    }

    #[test]
    fn recorded_errors_reconstruct_the_output() {
        // V = U + NTF·Q must hold for the *recorded* q, by independently
        // filtering it through the NTF polynomials.
        let mut rng = test_rng(7);
        for order in 1..=4usize {
            let design = synthesize_ntf(order, 1.5, DEFAULT_GAIN_GRID).unwrap();
            let samples: Vec<f64> = (0..512).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let input = TimeSeries::new(samples.clone(), 1.0).unwrap();
            let run = modulate(&design, &input, 4.0, 1e-3).unwrap();
            let shaped = iir_filter(
                &design.numerator(),
                &design.denominator(),
                &run.quantization_error,
            );
            let mut sum_sq = 0.0;
            for n in 0..samples.len() {
                let reconstructed = samples[n] + shaped[n];
                sum_sq += (reconstructed - run.output[n]).powi(2);
            }
            let rms = (sum_sq / samples.len() as f64).sqrt();
            assert!(rms < 1e-9, "order {order}: reconstruction RMS {rms}");
        }
    }

    #[test]
    fn oversized_input_clips_and_reports_unstable() {
        let design = synthesize_ntf(4, 1.5, DEFAULT_GAIN_GRID).unwrap();
        let input = TimeSeries::new(vec![3.0; 4096], 1.0).unwrap();
        let run = modulate(&design, &input, 4.0, 1e-3).unwrap();
        assert!(run.clip_count > 4, "expected sustained clipping, got {}", run.clip_count);
        assert!(!run.stable);
        assert!(run.peak_quantizer_input > 4.0);
        // The output stays two-level even under overload.
        assert!(run.output.iter().all(|&v| v == 1.0 || v == -1.0));
    }

    #[test]
    fn modulate_validates_limits() {
        let design = synthesize_ntf(2, 1.5, DEFAULT_GAIN_GRID).unwrap();
        let input = TimeSeries::new(vec![0.0; 4], 1.0).unwrap();
        assert!(matches!(modulate(&design, &input, 1.0, 1e-3), Err(Error::Parameter(_))));
        assert!(matches!(
            modulate(&design, &input, f64::INFINITY, 1e-3),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(modulate(&design, &input, 4.0, -0.1), Err(Error::Parameter(_))));
        assert!(matches!(modulate(&design, &input, 4.0, 1.5), Err(Error::Parameter(_))));
    }

    #[test]
    fn iir_filter_matches_hand_recursion() {
        // y_n = x_n + 0.5·y_{n−1} for b=[1], a=[1, −0.5].
        let y = iir_filter(&[1.0], &[1.0, -0.5], &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(y, vec![1.0, 0.5, 0.25, 0.125]);
        // Pure delay: b=[0, 1].
        let y = iir_filter(&[0.0, 1.0], &[1.0], &[3.0, 1.0, 4.0]);
        assert_eq!(y, vec![0.0, 3.0, 1.0]);
    }

    #[test]
    fn decomposition_of_identical_frames_is_zero() {
        let mut rng = test_rng(11);
        let data: Vec<Complex64> = (0..31)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let frame = build_hermitian_frame(&data, 64).unwrap();
        let padded = zero_pad_oversample(&frame, 4).unwrap();
        let decomp = inband_decomposition(&padded, &padded).unwrap();
        assert_eq!(decomp.inband_error.len(), 64);
        assert_eq!(decomp.outband.len(), 256 - 64);
        assert!(decomp.inband_error.iter().all(|e| e.re == 0.0 && e.im == 0.0));
    }

    #[test]
    fn decomposition_rejects_mismatched_partitions() {
        let zeros = vec![Complex64::new(0.0, 0.0); 16];
        let a = FrequencyFrame::from_centered(zeros.clone(), 4).unwrap();
        let b = FrequencyFrame::from_centered(zeros.clone(), 8).unwrap();
        assert!(matches!(inband_decomposition(&a, &b), Err(Error::Size(_))));
        let c = FrequencyFrame::from_centered(vec![Complex64::new(0.0, 0.0); 32], 4).unwrap();
        assert!(matches!(inband_decomposition(&a, &c), Err(Error::Size(_))));
    }

    #[test]
    fn bypassed_chain_has_zero_inband_error() {
        let mut rng = test_rng(13);
        let constellation = QamConstellation::new(4).unwrap();
        let bits: Vec<bool> = (0..62).map(|_| rng.gen()).collect();
        let data = qam_map(&bits, &constellation).unwrap();
        let frame = build_hermitian_frame(&data, 64).unwrap();
        let padded = zero_pad_oversample(&frame, 4).unwrap();
        let x = ifft_unitary(&padded, 15e3).unwrap();
        let design = synthesize_ntf(3, 1.5, DEFAULT_GAIN_GRID).unwrap();
        let run = modulate_bypassed(&design, &x);
        let y = TimeSeries::new(run.output, x.sample_rate_hz).unwrap();
        let y_freq = fft_unitary(&y)
            .unwrap()
            .with_inband_half_width(padded.inband_half_width())
            .unwrap();
        let decomp = inband_decomposition(&padded, &y_freq).unwrap();
        let worst = decomp.inband_error.iter().map(|e| e.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "largest in-band residual {worst}");
    }

    #[test]
    fn shaped_noise_leaves_the_band_quiet() {
        // Fourth-order shaping at 8× oversampling: mean in-band error power
        // sits at least 25 dB below the out-of-band plateau near Nyquist.
        // Zeros are spread over the occupied band (edge 1/16 cycles/sample at
        // L = 8), as the link layer does; an all-DC zero stack at the same
        // peak gain of 1.5 only manages an ~18 dB gap.
        let mut rng = test_rng(17);
        let constellation = QamConstellation::new(4).unwrap();
        let design = synthesize_ntf_for_band(4, 1.5, 1.0 / 16.0, DEFAULT_GAIN_GRID).unwrap();

        let mut inband_power = 0.0;
        let mut plateau_power = 0.0;
        let frames = 4;
        for _ in 0..frames {
            let bits: Vec<bool> = (0..254).map(|_| rng.gen()).collect();
            let data = qam_map(&bits, &constellation).unwrap();
            let frame = build_hermitian_frame(&data, 256).unwrap();
            let padded = zero_pad_oversample(&frame, 8).unwrap();
            let x = ifft_unitary(&padded, 15e3).unwrap();
            let peak = x.samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
            let scale = 0.5 / peak;
            let u = TimeSeries::new(
                x.samples.iter().map(|&s| s * scale).collect(),
                x.sample_rate_hz,
            )
            .unwrap();
            let scaled_frame = FrequencyFrame::from_centered(
                padded.values().iter().map(|&v| v * scale).collect(),
                padded.inband_half_width(),
            )
            .unwrap();

            let run = modulate(&design, &u, 4.0, 1e-3).unwrap();
            assert!(run.stable, "operating point should be stable");
            let y = TimeSeries::new(run.output, u.sample_rate_hz).unwrap();
            let y_freq = fft_unitary(&y)
                .unwrap()
                .with_inband_half_width(padded.inband_half_width())
                .unwrap();
            let decomp = inband_decomposition(&scaled_frame, &y_freq).unwrap();

            inband_power += decomp.inband_error.iter().map(|e| e.norm_sqr()).sum::<f64>()
                / decomp.inband_error.len() as f64;
            // "Near Nyquist" = the outermost tenth of the out-of-band bins
            // on each side (first and last 10% of the ascending-k list).
            let edge = decomp.outband.len() / 10;
            let near_nyquist: Vec<&Complex64> = decomp.outband[..edge]
                .iter()
                .chain(decomp.outband[decomp.outband.len() - edge..].iter())
                .collect();
            plateau_power += near_nyquist.iter().map(|v| v.norm_sqr()).sum::<f64>()
                / near_nyquist.len() as f64;
        }

        let gap_db = 10.0 * (plateau_power / inband_power).log10();
        assert!(gap_db >= 25.0, "in-band/out-of-band gap only {gap_db:.1} dB");
    }

    #[test]
    fn legendre_nodes_match_closed_forms() {
        // Orders 2 and 3 have textbook closed forms; 4 and 5 are standard
        // tabulated quadrature nodes.
        let n2 = legendre_nodes(2);
        let r3 = 1.0 / 3.0f64.sqrt();
        assert!((n2[0] + r3).abs() < 1e-12 && (n2[1] - r3).abs() < 1e-12, "{n2:?}");

        let n3 = legendre_nodes(3);
        let r35 = (3.0f64 / 5.0).sqrt();
        assert!((n3[0] + r35).abs() < 1e-12, "{n3:?}");
        assert!(n3[1].abs() < 1e-12, "{n3:?}");
        assert!((n3[2] - r35).abs() < 1e-12, "{n3:?}");

        let n4 = legendre_nodes(4);
        for (got, want) in n4.iter().zip([-0.861136311594053, -0.339981043584856, 0.339981043584856, 0.861136311594053]) {
            assert!((got - want).abs() < 1e-12, "{n4:?}");
        }
        let n5 = legendre_nodes(5);
        for (got, want) in n5.iter().zip([-0.906179845938664, -0.538469310105683, 0.0, 0.538469310105683, 0.906179845938664]) {
            assert!((got - want).abs() < 1e-12, "{n5:?}");
        }
    }

    #[test]
    fn banded_zeros_notch_the_signal_band() {
        let band_edge = 1.0 / 16.0;
        let banded = synthesize_ntf_for_band(4, 1.5, band_edge, DEFAULT_GAIN_GRID).unwrap();
        let dc = synthesize_ntf(4, 1.5, DEFAULT_GAIN_GRID).unwrap();

        // Zeros on the unit circle, in exact conjugate pairs, none at DC for
        // an even order.
        assert_eq!(banded.zeros().len(), 4);
        for &z in banded.zeros() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
            assert!(banded.zeros().iter().any(|&w| w == z.conj()));
            assert!(ntf_gain(&banded, z.arg() / (2.0 * PI)) < 1e-9);
        }
        assert!((banded.h_inf_realized() - 1.5).abs() <= 1.5e-6);

        // Spreading buys at least 10 dB of integrated in-band suppression
        // over the all-DC stack at the same peak gain.
        let mean_sq = |design: &NtfDesign| -> f64 {
            let points = 256;
            (1..=points)
                .map(|m| ntf_gain(design, band_edge * m as f64 / points as f64).powi(2))
                .sum::<f64>()
                / points as f64
        };
        let improvement_db = 10.0 * (mean_sq(&dc) / mean_sq(&banded)).log10();
        assert!(improvement_db >= 10.0, "only {improvement_db:.1} dB better");
    }

    #[test]
    fn band_edge_zero_collapses_to_dc_design() {
        let banded = synthesize_ntf_for_band(3, 1.5, 0.0, DEFAULT_GAIN_GRID).unwrap();
        let dc = synthesize_ntf(3, 1.5, DEFAULT_GAIN_GRID).unwrap();
        assert!(banded.zeros().iter().all(|&z| z == Complex64::new(1.0, 0.0)));
        for (a, b) in banded.poles().iter().zip(dc.poles()) {
            assert!((a - b).norm() < 1e-12);
        }

        // Order 1 keeps its single zero at DC for any band edge, so the
        // closed-form pole survives zero spreading.
        let first = synthesize_ntf_for_band(1, 1.5, 1.0 / 16.0, DEFAULT_GAIN_GRID).unwrap();
        assert!((first.poles()[0] - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn band_edge_is_validated() {
        assert!(matches!(
            synthesize_ntf_for_band(4, 1.5, -0.01, DEFAULT_GAIN_GRID),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            synthesize_ntf_for_band(4, 1.5, 0.5, DEFAULT_GAIN_GRID),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn unreachable_gain_clamps_to_the_floor_design() {
        // Quarter-band zeros (oversampling ratio 4) spread too wide for a
        // peak gain of 1.5; the synthesis hands back the lowest reachable
        // design and reports the shortfall instead of failing.
        let design = synthesize_ntf_for_band(4, 1.5, 1.0 / 8.0, DEFAULT_GAIN_GRID).unwrap();
        assert_eq!(design.h_inf_target(), 1.5);
        assert!(design.h_inf_realized() > 1.5);
        assert!(
            design.h_inf_realized() < 1.7,
            "floor {} looks wrong",
            design.h_inf_realized()
        );
        assert!(design.poles().iter().all(|p| p.norm() < 1.0));
        // Self-consistency: the reported gain is the measured peak gain.
        let measured = (0..=4096)
            .map(|i| ntf_gain(&design, 0.5 * i as f64 / 4096.0))
            .fold(0.0f64, f64::max);
        assert!(
            (measured - design.h_inf_realized()).abs() < 1e-3 * design.h_inf_realized(),
            "reported {} vs measured {measured}",
            design.h_inf_realized()
        );

        // A target above the floor is still matched exactly.
        let reachable = synthesize_ntf_for_band(4, 2.2, 1.0 / 8.0, DEFAULT_GAIN_GRID).unwrap();
        assert!((reachable.h_inf_realized() - 2.2).abs() <= 1e-6 * 2.2);
    }
}
