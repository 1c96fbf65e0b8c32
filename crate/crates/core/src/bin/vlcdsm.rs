//! Command-line front end: one verb per emitted table.
//!
//! `link` prints a single run's metrics, `sweep` the oversampling × order
//! grid, `psd` the LED input/output spectra, and `trace` the first frame's
//! modulator input/output. Every verb takes the same configuration surface:
//! built-in defaults, then an optional `--config` file of flat `key = value`
//! lines, then individual field flags, each layer overriding the previous.
//!
//! Exit codes: 0 on success, 1 for anything wrong with the request (bad
//! flag, unknown config key, unsatisfiable parameter set, unwritable
//! output), 2 for an internal invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use vlcdsm::config::LinkConfig;
use vlcdsm::error::Error;
use vlcdsm::link::{
    emit_psd_report, emit_time_traces, render_link_csv, render_sweep_csv, run_link,
    sweep_evm,
};

#[derive(Parser)]
#[command(
    name = "vlcdsm",
    version,
    about = "Simulates a DCO-OFDM link driven through a one-bit delta-sigma LED modulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one link and print its metrics as `metric,value` CSV
    Link(CommonArgs),
    /// Run the oversampling × loop-order grid and print one row per cell
    Sweep(SweepArgs),
    /// Print Welch spectra of the LED drive and the LED output
    Psd(CommonArgs),
    /// Print the first frame's modulator input and two-level output
    Trace(TraceArgs),
}

/// Configuration surface shared by every verb.
#[derive(Args)]
struct CommonArgs {
    /// Config file of flat `key = value` lines (`#` comments allowed)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the table to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    fields: FieldFlags,
}

/// One flag per config field; set flags override `--config` file values.
#[derive(Args)]
struct FieldFlags {
    /// Subcarriers per frame (power of two)
    #[arg(long)]
    n: Option<usize>,
    /// Subcarrier spacing in Hz
    #[arg(long)]
    delta_f_hz: Option<f64>,
    /// QAM order: 4, 16, or 64
    #[arg(long)]
    qam_order: Option<usize>,
    /// Oversampling ratio L
    #[arg(long)]
    osr: Option<usize>,
    /// Noise transfer function order
    #[arg(long)]
    ntf_order: Option<usize>,
    /// Out-of-band gain target of the noise transfer function
    #[arg(long)]
    h_inf: Option<f64>,
    /// Waveform peak after per-frame scaling
    #[arg(long)]
    input_peak_scale: Option<f64>,
    /// Include the LED low-pass in the chain
    #[arg(long)]
    led_enabled: Option<bool>,
    /// LED 3 dB bandwidth in Hz
    #[arg(long)]
    led_f3db_hz: Option<f64>,
    /// Receiver SNR in dB, or `none` for a noiseless chain
    #[arg(long)]
    snr_db: Option<String>,
    /// Frames per run
    #[arg(long)]
    frames: Option<usize>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Drive level for modulator −1
    #[arg(long)]
    level_low: Option<f64>,
    /// Drive level for modulator +1
    #[arg(long)]
    level_high: Option<f64>,
    /// Quantizer-input saturation magnitude
    #[arg(long)]
    clip_limit: Option<f64>,
    /// Clipped fraction above which a run is flagged unstable
    #[arg(long)]
    clip_fraction_limit: Option<f64>,
    /// Replace the quantizer with a pass-through (debug)
    #[arg(long)]
    bypass_modulator: Option<bool>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Oversampling ratios to sweep
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,12,16,24,32")]
    osr_list: Vec<usize>,
    /// Loop orders to sweep
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    order_list: Vec<usize>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Samples to emit (at most one frame, L·N)
    #[arg(long, default_value_t = 256)]
    num_samples: usize,
}

impl FieldFlags {
    /// Applies every set flag through the same string-keyed setter the
    /// config file uses, so flag and file semantics cannot drift apart.
    fn apply(&self, config: &mut LinkConfig) -> Result<(), Error> {
        let mut pairs: Vec<(&str, String)> = Vec::new();
        macro_rules! stage {
            ($field:ident) => {
                if let Some(value) = &self.$field {
                    pairs.push((stringify!($field), value.to_string()));
                }
            };
        }
        stage!(n);
        stage!(delta_f_hz);
        stage!(qam_order);
        stage!(osr);
        stage!(ntf_order);
        stage!(h_inf);
        stage!(input_peak_scale);
        stage!(led_enabled);
        stage!(led_f3db_hz);
        stage!(snr_db);
        stage!(frames);
        stage!(seed);
        stage!(level_low);
        stage!(level_high);
        stage!(clip_limit);
        stage!(clip_fraction_limit);
        stage!(bypass_modulator);
        for (key, value) in pairs {
            config.set_field(key, &value)?;
        }
        Ok(())
    }
}

impl CommonArgs {
    fn effective_config(&self) -> Result<LinkConfig, Error> {
        let mut config = LinkConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Parameter(format!("cannot read config file {}: {e}", path.display()))
            })?;
            config.apply_config_text(&text)?;
        }
        self.fields.apply(&mut config)?;
        config.validate()?;
        Ok(config)
    }
}

fn execute(command: &Command) -> Result<(String, &CommonArgs), Error> {
    match command {
        Command::Link(common) => {
            let config = common.effective_config()?;
            let report = run_link(&config)?;
            Ok((render_link_csv(&report), common))
        }
        Command::Sweep(args) => {
            let config = args.common.effective_config()?;
            let result = sweep_evm(&config, &args.osr_list, &args.order_list)?;
            Ok((render_sweep_csv(&result), &args.common))
        }
        Command::Psd(common) => {
            let config = common.effective_config()?;
            Ok((emit_psd_report(&config)?, common))
        }
        Command::Trace(args) => {
            let config = args.common.effective_config()?;
            Ok((emit_time_traces(&config, args.num_samples)?, &args.common))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match execute(&cli.command) {
        Ok((table, common)) => match &common.output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, &table) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
                ExitCode::SUCCESS
            }
            None => {
                print!("{table}");
                ExitCode::SUCCESS
            }
        },
        Err(error) => {
            eprintln!("error: {error}");
            match error {
                // A frame that should be real coming out non-Hermitian means
                // the transmitter itself is broken, not the request.
                Error::NonHermitian { .. } => ExitCode::from(2),
                Error::Size(_) | Error::Parameter(_) | Error::Synthesis(_) => {
                    ExitCode::from(1)
                }
            }
        }
    }
}
