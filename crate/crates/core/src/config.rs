//! Link configuration: one flat struct holding every knob of the simulated
//! link, with defaults, string-keyed assignment for config files and CLI
//! flags, validation, and self-describing header emission.
//!
//! The same key names work in a `key = value` config file, as CLI flags, and
//! in the `#`-prefixed header block of every emitted table, so a header can
//! be pasted back as a config file to reproduce a run exactly.

use crate::error::{Error, Result};

/// Complete description of one simulated link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    /// Subcarrier count per OFDM frame (power of two).
    pub n: usize,
    /// Subcarrier spacing in Hz.
    pub delta_f_hz: f64,
    /// QAM constellation order: 4, 16, or 64.
    pub qam_order: usize,
    /// Oversampling ratio L; the modulator runs at L·N·Δf.
    pub osr: usize,
    /// Noise transfer function order.
    pub ntf_order: usize,
    /// Out-of-band gain target for the noise transfer function.
    pub h_inf: f64,
    /// Per-frame waveform peak after scaling (quantizer full scale is 1).
    pub input_peak_scale: f64,
    /// Whether the LED low-pass sits in the chain.
    pub led_enabled: bool,
    /// LED 3 dB bandwidth in Hz.
    pub led_f3db_hz: f64,
    /// Optional electrical SNR for additive receiver noise; `None` = noiseless.
    pub snr_db: Option<f64>,
    /// Frames simulated per run.
    pub frames: usize,
    /// Base RNG seed; all randomness in a run derives from it.
    pub seed: u64,
    /// Drive level mapped from modulator −1 (LED off or dim).
    pub level_low: f64,
    /// Drive level mapped from modulator +1 (LED on).
    pub level_high: f64,
    /// Quantizer-input saturation magnitude.
    pub clip_limit: f64,
    /// Clipped-sample fraction above which a run is flagged unstable.
    pub clip_fraction_limit: f64,
    /// Debug flag: replace the one-bit quantizer with a pass-through and skip
    /// the two-level drive stage, leaving the rest of the chain intact.
    pub bypass_modulator: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            n: 256,
            delta_f_hz: 15e3,
            qam_order: 4,
            osr: 8,
            ntf_order: 4,
            h_inf: 1.5,
            input_peak_scale: 0.5,
            led_enabled: true,
            led_f3db_hz: 2.5e6,
            snr_db: None,
            frames: 100,
            seed: 1,
            level_low: 0.0,
            level_high: 1.0,
            clip_limit: 4.0,
            clip_fraction_limit: 1e-3,
            bypass_modulator: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| {
        Error::Parameter(format!("cannot parse {key} value {value:?}"))
    })
}

impl LinkConfig {
    /// Modulator/DAC sample rate: L·N·Δf.
    pub fn sample_rate_hz(&self) -> f64 {
        self.osr as f64 * self.n as f64 * self.delta_f_hz
    }

    /// Payload bits per frame: (N/2 − 1) data subcarriers × log2(QAM order).
    pub fn bits_per_frame(&self) -> usize {
        (self.n / 2 - 1) * self.qam_order.trailing_zeros() as usize
    }

    /// Assigns one field by its key. Unknown keys are an error so that a
    /// typo in a config file cannot silently fall back to a default.
    pub fn set_field(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n" => self.n = parse(key, value)?,
            "delta_f_hz" => self.delta_f_hz = parse(key, value)?,
            "qam_order" => self.qam_order = parse(key, value)?,
            "osr" => self.osr = parse(key, value)?,
            "ntf_order" => self.ntf_order = parse(key, value)?,
            "h_inf" => self.h_inf = parse(key, value)?,
            "input_peak_scale" => self.input_peak_scale = parse(key, value)?,
            "led_enabled" => self.led_enabled = parse(key, value)?,
            "led_f3db_hz" => self.led_f3db_hz = parse(key, value)?,
            "snr_db" => {
                let trimmed = value.trim();
                self.snr_db = if trimmed.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(parse(key, trimmed)?)
                };
            }
            "frames" => self.frames = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "level_low" => self.level_low = parse(key, value)?,
            "level_high" => self.level_high = parse(key, value)?,
            "clip_limit" => self.clip_limit = parse(key, value)?,
            "clip_fraction_limit" => self.clip_fraction_limit = parse(key, value)?,
            "bypass_modulator" => self.bypass_modulator = parse(key, value)?,
            _ => {
                return Err(Error::Parameter(format!(
                    "unknown config key {key:?}"
                )))
            }
        }
        Ok(())
    }

    /// Applies a flat `key = value` config file. Blank lines and lines whose
    /// first non-space character is `#` are skipped; a `#` header block from
    /// an emitted table therefore reads back after stripping the `# ` prefix.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parameter(format!(
                    "config line {} is not `key = value`: {raw:?}",
                    index + 1
                ))
            })?;
            self.set_field(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// The full effective configuration as `# key = value` lines, in a fixed
    /// order, with values printed losslessly (shortest round-trip decimal).
    pub fn header_lines(&self) -> Vec<String> {
        let option = |v: &Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => "none".into(),
        };
        vec![
            format!("# n = {}", self.n),
            format!("# delta_f_hz = {}", self.delta_f_hz),
            format!("# qam_order = {}", self.qam_order),
            format!("# osr = {}", self.osr),
            format!("# ntf_order = {}", self.ntf_order),
            format!("# h_inf = {}", self.h_inf),
            format!("# input_peak_scale = {}", self.input_peak_scale),
            format!("# led_enabled = {}", self.led_enabled),
            format!("# led_f3db_hz = {}", self.led_f3db_hz),
            format!("# snr_db = {}", option(&self.snr_db)),
            format!("# frames = {}", self.frames),
            format!("# seed = {}", self.seed),
            format!("# level_low = {}", self.level_low),
            format!("# level_high = {}", self.level_high),
            format!("# clip_limit = {}", self.clip_limit),
            format!("# clip_fraction_limit = {}", self.clip_fraction_limit),
            format!("# bypass_modulator = {}", self.bypass_modulator),
        ]
    }

    /// Checks every cross-field constraint the chain relies on.
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || !self.n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "n must be a power of two >= 4, got {}",
                self.n
            )));
        }
        if !(self.delta_f_hz.is_finite() && self.delta_f_hz > 0.0) {
            return Err(Error::Parameter(format!(
                "delta_f_hz must be positive and finite, got {}",
                self.delta_f_hz
            )));
        }
        if !matches!(self.qam_order, 4 | 16 | 64) {
            return Err(Error::Parameter(format!(
                "qam_order must be 4, 16, or 64, got {}",
                self.qam_order
            )));
        }
        if self.osr < 1 {
            return Err(Error::Parameter("osr must be at least 1".into()));
        }
        let total = self.osr.checked_mul(self.n).ok_or_else(|| {
            Error::Parameter(format!("osr*n = {}*{} overflows", self.osr, self.n))
        })?;
        crate::ofdm::ensure_transform_len(total).map_err(|_| {
            Error::Parameter(format!(
                "osr*n = {total} must factor into 2s and 3s for the transforms"
            ))
        })?;
        if !(1..=8).contains(&self.ntf_order) {
            return Err(Error::Parameter(format!(
                "ntf_order must lie in 1..=8, got {}",
                self.ntf_order
            )));
        }
        if !(self.h_inf.is_finite() && self.h_inf > 1.0 && self.h_inf <= 4.0) {
            return Err(Error::Parameter(format!(
                "h_inf must lie in (1, 4], got {}",
                self.h_inf
            )));
        }
        if !(self.input_peak_scale.is_finite()
            && self.input_peak_scale > 0.0
            && self.input_peak_scale <= 1.0)
        {
            return Err(Error::Parameter(format!(
                "input_peak_scale must lie in (0, 1], got {}",
                self.input_peak_scale
            )));
        }
        if self.led_enabled {
            if !(self.led_f3db_hz.is_finite() && self.led_f3db_hz > 0.0) {
                return Err(Error::Parameter(format!(
                    "led_f3db_hz must be positive and finite, got {}",
                    self.led_f3db_hz
                )));
            }
            if self.sample_rate_hz() <= 2.0 * self.led_f3db_hz {
                return Err(Error::Parameter(format!(
                    "sample rate {} Hz must exceed twice led_f3db_hz = {} Hz",
                    self.sample_rate_hz(),
                    self.led_f3db_hz
                )));
            }
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::Parameter("snr_db must not be NaN".into()));
            }
        }
        if self.frames < 1 {
            return Err(Error::Parameter("frames must be at least 1".into()));
        }
        if !(self.level_low >= 0.0 && self.level_low.is_finite()) {
            return Err(Error::Parameter(format!(
                "level_low must be nonnegative and finite, got {}",
                self.level_low
            )));
        }
        if !(self.level_high.is_finite() && self.level_high > self.level_low) {
            return Err(Error::Parameter(format!(
                "level_high must exceed level_low, got {} vs {}",
                self.level_high, self.level_low
            )));
        }
        if !(self.clip_limit.is_finite() && self.clip_limit > 1.0) {
            return Err(Error::Parameter(format!(
                "clip_limit must be finite and > 1, got {}",
                self.clip_limit
            )));
        }
        if !(0.0..=1.0).contains(&self.clip_fraction_limit) {
            return Err(Error::Parameter(format!(
                "clip_fraction_limit must lie in [0, 1], got {}",
                self.clip_fraction_limit
            )));
        }
        Ok(())
    }
}
