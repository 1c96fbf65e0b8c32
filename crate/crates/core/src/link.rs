//! Seeded end-to-end link runner and experiment emitters.
//!
//! [`run_link`] wires the full chain — random bits → QAM → Hermitian frame →
//! frequency-domain interpolation → unitary IFFT → peak scaling → one-bit
//! delta-sigma modulator → two-level LED drive → LED low-pass → optional
//! additive noise → in-band FFT extraction → (optional one-tap equalizer) →
//! EVM/BER/PAPR. [`sweep_evm`] runs the oversampling-ratio × loop-order grid
//! behind the headline EVM comparisons, and the `emit_*` functions format
//! deterministic CSV tables (two-level time traces, LED input/output spectra)
//! so every figure-equivalent is reproducible from a config and a seed.
//!
//! The noise transfer function for each run places its in-band zeros on a
//! Gauss-Legendre grid across the occupied band (`synthesize_ntf_for_band`
//! with band edge 1/(2·OSR)); at OSR 1 the band fills the whole axis and the
//! zeros collapse to DC.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::LinkConfig;
use crate::delta_sigma::{
    modulate, modulate_bypassed, synthesize_ntf_for_band, DEFAULT_GAIN_GRID,
};
use crate::error::{Error, Result};
use crate::frontend::{awgn, bias_and_scale, led_lowpass, DriveSignal, LedModel};
use crate::metrics::{ber, evm, extract_inband, psd_welch, PsdEstimate, Window};
use crate::ofdm::{
    build_hermitian_frame, ifft_unitary, papr, qam_demap, qam_map, zero_pad_oversample,
    QamConstellation, TimeSeries,
};

/// XOR salt that derives the additive-noise RNG stream from the base seed,
/// keeping it decoupled from the data-bit stream without a second
/// user-facing seed.
const NOISE_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Welch segment length used for the spectral report.
pub const PSD_SEGMENT: usize = 4096;

/// Everything measured on one simulated link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    /// The configuration that produced this report.
    pub config: LinkConfig,
    /// Modulator/DAC rate, L·N·Δf.
    pub sample_rate_hz: f64,
    /// Per-frame waveform scale factor (peak → `input_peak_scale`).
    pub frame_scale_factors: Vec<f64>,
    /// RMS-over-frames EVM in percent, measured at the modulator output
    /// (before the analog front end).
    pub evm_percent: f64,
    /// EVM after the LED without equalization (None when the front end is
    /// out of the chain).
    pub evm_led_raw_percent: Option<f64>,
    /// EVM after the LED with the one-tap per-subcarrier equalizer. The
    /// equalizer inverts the LED response exactly at each bin, but frames are
    /// transmitted back to back with no cyclic prefix, so each frame's DFT
    /// also sees the filter state left by the previous frame; that boundary
    /// leakage keeps this figure somewhat above the pre-front-end EVM.
    pub evm_equalized_percent: Option<f64>,
    /// Bit error rate on the decision path: equalized post-LED bins when the
    /// LED is in the chain, modulator-output bins otherwise.
    pub ber: f64,
    /// Peak-to-average power ratio of each frame's scaled waveform, in dB.
    pub papr_db_per_frame: Vec<f64>,
    /// Mean of `papr_db_per_frame`.
    pub papr_db_mean: f64,
    /// Fraction of frames whose modulator run stayed within the clip budget.
    pub stable_fraction: f64,
    /// Clipped quantizer inputs summed over all frames.
    pub total_clip_count: usize,
    /// Largest |quantizer input| seen anywhere in the run.
    pub peak_quantizer_input: f64,
    /// Scaled modulator input, all frames concatenated.
    pub modulator_input: TimeSeries,
    /// Modulator output, all frames concatenated (±1 unless bypassed).
    pub modulator_output: TimeSeries,
    /// Two-level LED drive (None when bypassed or the LED is disabled).
    pub drive: Option<DriveSignal>,
    /// LED output before receiver noise (None as above).
    pub led_output: Option<TimeSeries>,
    /// Welch spectrum of the LED drive, when it exists and spans at least
    /// [`PSD_SEGMENT`] samples.
    pub led_input_psd: Option<PsdEstimate>,
    /// Welch spectrum of the LED output under the same conditions.
    pub led_output_psd: Option<PsdEstimate>,
}

/// One cell of an OSR × order sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub osr: usize,
    pub ntf_order: usize,
    /// The derived seed this cell ran with (base seed + row index).
    pub seed: u64,
    pub evm_percent: f64,
    /// Equalized post-LED EVM; equals `evm_percent` when the LED is not in
    /// the chain (the equalizer is then unity).
    pub evm_equalized_percent: f64,
    pub stable_fraction: f64,
    pub papr_db_mean: f64,
    pub ber: f64,
}

/// Grid sweep output: one row per (osr, order) pair in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub base: LinkConfig,
    pub osr_list: Vec<usize>,
    pub order_list: Vec<usize>,
    pub rows: Vec<SweepRow>,
}

/// Root-mean-square of per-frame EVM fractions, in percent. RMS (rather than
/// a plain mean) makes the aggregate an energy ratio over the whole run.
fn rms_percent(fractions: &[f64]) -> f64 {
    let mean_square: f64 =
        fractions.iter().map(|f| f * f).sum::<f64>() / fractions.len() as f64;
    100.0 * mean_square.sqrt()
}

/// Runs one complete link and measures everything.
///
/// All randomness derives from `config.seed`: data bits come from one
/// ChaCha8 stream consumed frame by frame (so frame k's payload does not
/// depend on how many frames follow it), and receiver noise, when enabled,
/// uses the salted stream `seed ^ NOISE_SEED_SALT`.
///
/// When `bypass_modulator` is set the quantizer becomes a pass-through and
/// the analog front end is skipped entirely — the bypassed output is no
/// longer two-level, so there is nothing lawful to drive the LED with. The
/// modulator never aborts the run on instability; it is recorded in
/// `stable_fraction` and the clip counters.
pub fn run_link(config: &LinkConfig) -> Result<LinkReport> {
    config.validate()?;
    let constellation = QamConstellation::new(config.qam_order)?;
    let fs = config.sample_rate_hz();
    let frame_len = config.osr * config.n;
    let band_edge = if config.osr > 1 { 1.0 / (2.0 * config.osr as f64) } else { 0.0 };
    let design =
        synthesize_ntf_for_band(config.ntf_order, config.h_inf, band_edge, DEFAULT_GAIN_GRID)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tx_bits = Vec::with_capacity(config.frames * config.bits_per_frame());
    let mut references: Vec<Vec<Complex64>> = Vec::with_capacity(config.frames);
    let mut frame_scale_factors = Vec::with_capacity(config.frames);
    let mut papr_db_per_frame = Vec::with_capacity(config.frames);
    let mut input_samples = Vec::with_capacity(config.frames * frame_len);
    let mut output_samples = Vec::with_capacity(config.frames * frame_len);
    let mut stable_frames = 0usize;
    let mut total_clip_count = 0usize;
    let mut peak_quantizer_input = 0.0f64;

    for _ in 0..config.frames {
        let bits: Vec<bool> = (0..config.bits_per_frame()).map(|_| rng.gen()).collect();
        let data = qam_map(&bits, &constellation)?;
        let frame = build_hermitian_frame(&data, config.n)?;
        let padded = zero_pad_oversample(&frame, config.osr)?;
        let x = ifft_unitary(&padded, config.delta_f_hz)?;
        let peak = x.samples.iter().fold(0.0f64, |m, &s| m.max(s.abs()));
        let scale = config.input_peak_scale / peak;
        let u = TimeSeries::new(x.samples.iter().map(|&s| s * scale).collect(), fs)?;
        papr_db_per_frame.push(papr(&u)?.db);

        let run = if config.bypass_modulator {
            modulate_bypassed(&design, &u)
        } else {
            modulate(&design, &u, config.clip_limit, config.clip_fraction_limit)?
        };
        stable_frames += run.stable as usize;
        total_clip_count += run.clip_count;
        peak_quantizer_input = peak_quantizer_input.max(run.peak_quantizer_input);

        input_samples.extend_from_slice(&u.samples);
        output_samples.extend(run.output);
        references.push(data.iter().map(|&d| d * scale).collect());
        frame_scale_factors.push(scale);
        tx_bits.extend(bits);
    }
    let modulator_input = TimeSeries::new(input_samples, fs)?;
    let modulator_output = TimeSeries::new(output_samples, fs)?;

    // Receive directly off the modulator output: the primary EVM, and the
    // bit decisions used when the LED is not in the chain.
    let mut pre_evm_fractions = Vec::with_capacity(config.frames);
    let mut pre_bits = Vec::with_capacity(tx_bits.len());
    for (index, reference) in references.iter().enumerate() {
        let slice = TimeSeries::new(
            modulator_output.samples[index * frame_len..(index + 1) * frame_len].to_vec(),
            fs,
        )?;
        let bins = extract_inband(&slice, config.n, config.osr)?;
        pre_evm_fractions.push(evm(&bins, reference)?.evm_fraction);
        let decisions: Vec<Complex64> =
            bins.iter().map(|&b| b / frame_scale_factors[index]).collect();
        pre_bits.extend(qam_demap(&decisions, &constellation));
    }
    let evm_percent = rms_percent(&pre_evm_fractions);

    // Analog front end: two-level drive, LED low-pass, optional noise, then
    // the same extraction with and without the one-tap equalizer.
    let mut evm_led_raw_percent = None;
    let mut evm_equalized_percent = None;
    let mut drive_signal = None;
    let mut led_output = None;
    let mut led_input_psd = None;
    let mut led_output_psd = None;
    let mut decision_bits = pre_bits;
    if config.led_enabled && !config.bypass_modulator {
        let drive = bias_and_scale(
            &modulator_output.samples,
            fs,
            config.level_low,
            config.level_high,
        )?;
        let led = LedModel::new(config.led_f3db_hz)?;
        let filtered = led_lowpass(&drive, &led)?;
        let received = match config.snr_db {
            Some(snr_db) => awgn(&filtered, snr_db, config.seed ^ NOISE_SEED_SALT)?,
            None => filtered.clone(),
        };
        let gain = drive.gain();

        let mut raw_fractions = Vec::with_capacity(config.frames);
        let mut equalized_fractions = Vec::with_capacity(config.frames);
        let mut equalized_bits = Vec::with_capacity(tx_bits.len());
        for (index, reference) in references.iter().enumerate() {
            let slice = TimeSeries::new(
                received.samples[index * frame_len..(index + 1) * frame_len].to_vec(),
                fs,
            )?;
            let bins = extract_inband(&slice, config.n, config.osr)?;
            let raw: Vec<Complex64> = bins.iter().map(|&b| b / gain).collect();
            raw_fractions.push(evm(&raw, reference)?.evm_fraction);

            let equalized: Vec<Complex64> = bins
                .iter()
                .enumerate()
                .map(|(i, &b)| {
                    let freq_hz = (i + 1) as f64 * config.delta_f_hz;
                    Ok(b / (gain * led.response(freq_hz, fs)?))
                })
                .collect::<Result<_>>()?;
            equalized_fractions.push(evm(&equalized, reference)?.evm_fraction);
            let decisions: Vec<Complex64> = equalized
                .iter()
                .map(|&b| b / frame_scale_factors[index])
                .collect();
            equalized_bits.extend(qam_demap(&decisions, &constellation));
        }
        evm_led_raw_percent = Some(rms_percent(&raw_fractions));
        evm_equalized_percent = Some(rms_percent(&equalized_fractions));
        decision_bits = equalized_bits;

        if drive.samples.len() >= PSD_SEGMENT {
            let drive_series = TimeSeries::new(drive.samples.clone(), fs)?;
            led_input_psd = Some(psd_welch(&drive_series, PSD_SEGMENT, 0.5, Window::Hann)?);
            led_output_psd = Some(psd_welch(&filtered, PSD_SEGMENT, 0.5, Window::Hann)?);
        }
        drive_signal = Some(drive);
        led_output = Some(filtered);
    }
    let ber = ber(&tx_bits, &decision_bits)?;

    let papr_db_mean =
        papr_db_per_frame.iter().sum::<f64>() / papr_db_per_frame.len() as f64;
    Ok(LinkReport {
        config: config.clone(),
        sample_rate_hz: fs,
        frame_scale_factors,
        evm_percent,
        evm_led_raw_percent,
        evm_equalized_percent,
        ber,
        papr_db_per_frame,
        papr_db_mean,
        stable_fraction: stable_frames as f64 / config.frames as f64,
        total_clip_count,
        peak_quantizer_input,
        modulator_input,
        modulator_output,
        drive: drive_signal,
        led_output,
        led_input_psd,
        led_output_psd,
    })
}

/// Runs the OSR × order grid. Rows come out in row-major order (each osr,
/// then each order) and cell row k runs with seed `base.seed + k`, recorded
/// in the row, so any cell is reproducible in isolation.
pub fn sweep_evm(
    base: &LinkConfig,
    osr_list: &[usize],
    order_list: &[usize],
) -> Result<SweepResult> {
    if osr_list.is_empty() || order_list.is_empty() {
        return Err(Error::Size(
            "sweep needs nonempty osr and order lists".into(),
        ));
    }
    let mut rows = Vec::with_capacity(osr_list.len() * order_list.len());
    for (row_index, (&osr, &ntf_order)) in osr_list
        .iter()
        .flat_map(|osr| order_list.iter().map(move |order| (osr, order)))
        .enumerate()
    {
        let mut cell = base.clone();
        cell.osr = osr;
        cell.ntf_order = ntf_order;
        cell.seed = base.seed.wrapping_add(row_index as u64);
        let report = run_link(&cell)?;
        rows.push(SweepRow {
            osr,
            ntf_order,
            seed: cell.seed,
            evm_percent: report.evm_percent,
            evm_equalized_percent: report
                .evm_equalized_percent
                .unwrap_or(report.evm_percent),
            stable_fraction: report.stable_fraction,
            papr_db_mean: report.papr_db_mean,
            ber: report.ber,
        });
    }
    Ok(SweepResult {
        base: base.clone(),
        osr_list: osr_list.to_vec(),
        order_list: order_list.to_vec(),
        rows,
    })
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Renders a sweep as CSV: `#` header block with the base config, the grid,
/// and the seed scheme, then one row per cell. Floats print in shortest
/// round-trip form, so the table re-reads losslessly.
pub fn render_sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    for line in result.base.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&format!("# osr_list = {}\n", join(&result.osr_list)));
    out.push_str(&format!("# order_list = {}\n", join(&result.order_list)));
    out.push_str("# per_cell_seed = seed + row_index\n");
    out.push_str(
        "osr,ntf_order,seed,evm_percent,evm_equalized_percent,stable_fraction,papr_db_mean,ber\n",
    );
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.osr,
            row.ntf_order,
            row.seed,
            row.evm_percent,
            row.evm_equalized_percent,
            row.stable_fraction,
            row.papr_db_mean,
            row.ber
        ));
    }
    out
}

/// Renders a single run's metrics as a two-column CSV (`metric,value`).
pub fn render_link_csv(report: &LinkReport) -> String {
    let mut out = String::new();
    for line in report.config.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("metric,value\n");
    out.push_str(&format!("sample_rate_hz,{}\n", report.sample_rate_hz));
    out.push_str(&format!("evm_percent,{}\n", report.evm_percent));
    let optional = |v: Option<f64>| match v {
        Some(x) => x.to_string(),
        None => "none".into(),
    };
    out.push_str(&format!(
        "evm_led_raw_percent,{}\n",
        optional(report.evm_led_raw_percent)
    ));
    out.push_str(&format!(
        "evm_equalized_percent,{}\n",
        optional(report.evm_equalized_percent)
    ));
    out.push_str(&format!("ber,{}\n", report.ber));
    out.push_str(&format!("papr_db_mean,{}\n", report.papr_db_mean));
    out.push_str(&format!("stable_fraction,{}\n", report.stable_fraction));
    out.push_str(&format!("total_clip_count,{}\n", report.total_clip_count));
    out.push_str(&format!(
        "peak_quantizer_input,{}\n",
        report.peak_quantizer_input
    ));
    out
}

/// Emits the first frame's modulator input and output as CSV — the two-level
/// time-trace view. `num_samples` must not exceed one frame (L·N samples).
///
/// Only the first frame is simulated; because the bit stream is consumed
/// frame by frame from one seeded generator, that frame is identical to the
/// first frame of a longer run with the same config.
pub fn emit_time_traces(config: &LinkConfig, num_samples: usize) -> Result<String> {
    config.validate()?;
    let frame_len = config.osr * config.n;
    if num_samples == 0 || num_samples > frame_len {
        return Err(Error::Size(format!(
            "trace length must lie in 1..={frame_len} (one frame), got {num_samples}"
        )));
    }
    let mut one_frame = config.clone();
    one_frame.frames = 1;
    let report = run_link(&one_frame)?;

    let mut out = String::new();
    for line in one_frame.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("sample_index,modulator_input,modulator_output\n");
    for index in 0..num_samples {
        out.push_str(&format!(
            "{},{},{}\n",
            index,
            report.modulator_input.samples[index],
            report.modulator_output.samples[index]
        ));
    }
    Ok(out)
}

/// Emits the Welch spectra of the LED drive and the LED output over all
/// frames concatenated, as CSV with both columns normalized to 0 dB peaks.
///
/// Requires the LED in the chain (no drive exists otherwise) and at least
/// [`PSD_SEGMENT`] total samples — frames × L × N must reach the segment
/// length of the estimator.
pub fn emit_psd_report(config: &LinkConfig) -> Result<String> {
    config.validate()?;
    if !config.led_enabled || config.bypass_modulator {
        return Err(Error::Parameter(
            "the spectral report needs the LED in the chain and the modulator active".into(),
        ));
    }
    let total = config.frames * config.osr * config.n;
    if total < PSD_SEGMENT {
        return Err(Error::Size(format!(
            "{total} samples cannot fill one {PSD_SEGMENT}-sample estimator segment; \
             increase frames"
        )));
    }
    let report = run_link(config)?;
    let input_psd = report
        .led_input_psd
        .expect("drive exists and spans at least one segment");
    let output_psd = report
        .led_output_psd
        .expect("LED output exists and spans at least one segment");

    let mut out = String::new();
    for line in config.header_lines() {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str(&format!(
        "# welch segment = {PSD_SEGMENT}, overlap = 0.5, window = {}\n",
        input_psd.window
    ));
    out.push_str("freq_hz,psd_db_led_input,psd_db_led_output\n");
    for ((freq, input_db), output_db) in input_psd
        .freqs_hz
        .iter()
        .zip(&input_psd.power_db)
        .zip(&output_psd.power_db)
    {
        out.push_str(&format!("{freq},{input_db},{output_db}\n"));
    }
    Ok(out)
}
