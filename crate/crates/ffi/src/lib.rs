//! C interface to the `vlcdsm` link simulator.
//!
//! The API follows the opaque-handle pattern. A `VlcdsmConfig` starts from
//! the library defaults and is adjusted through string key/value pairs — the
//! same keys the CLI accepts in configuration files — then `vlcdsm_link_run`
//! consumes it and produces a `VlcdsmReport` exposing the scalar metrics and
//! the two-level modulator waveform. `vlcdsm_sweep_csv` runs a grid of
//! oversampling ratios and shaping orders and returns the result table as a
//! CSV string.
//!
//! Every fallible function returns a [`VlcdsmStatus`]; on failure a
//! human-readable reason is stored per thread and can be fetched with
//! [`vlcdsm_last_error_message`]. Handles and strings returned by this
//! library must be released exactly once with the matching `*_free`
//! function; passing null to a `*_free` is a no-op. Scalar getters return
//! NaN (or zero for counts) when handed a null report rather than crashing.
//!
//! Pointer contracts are stated on each function; within those contracts
//! every function is safe to call from any thread.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use vlcdsm::config::LinkConfig;
use vlcdsm::error::Error;
use vlcdsm::link::{render_link_csv, render_sweep_csv, run_link, sweep_evm, LinkReport};

/// Result code returned by every fallible function in this library.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum VlcdsmStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidString = 2,
    /// A configuration key, value, or parameter combination was rejected.
    InvalidParameter = 3,
    /// The noise-shaping filter design could not be realized.
    SynthesisFailure = 4,
    /// An internal consistency check failed; this indicates a bug.
    InternalError = 5,
}

/// Opaque link configuration handle.
pub struct VlcdsmConfig {
    inner: LinkConfig,
}

/// Opaque handle to the results of one completed link run.
pub struct VlcdsmReport {
    inner: LinkReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn record_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_for(err: &Error) -> VlcdsmStatus {
    record_error(&err.to_string());
    match err {
        Error::Size(_) | Error::Parameter(_) => VlcdsmStatus::InvalidParameter,
        Error::Synthesis(_) => VlcdsmStatus::SynthesisFailure,
        Error::NonHermitian { .. } => VlcdsmStatus::InternalError,
    }
}

fn null_argument(name: &str) -> VlcdsmStatus {
    record_error(&format!("{name} must not be null"));
    VlcdsmStatus::NullArgument
}

/// Views a NUL-terminated argument as UTF-8, recording an error on failure.
unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, VlcdsmStatus> {
    if ptr.is_null() {
        return Err(null_argument(name));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        record_error(&format!("{name} is not valid UTF-8"));
        VlcdsmStatus::InvalidString
    })
}

/// Views a (pointer, count) pair as a slice; a zero count never touches the
/// pointer, so `(NULL, 0)` is a valid empty list.
unsafe fn list_arg<'a>(
    ptr: *const u32,
    count: usize,
    name: &str,
) -> Result<&'a [u32], VlcdsmStatus> {
    if count == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null_argument(name));
    }
    Ok(std::slice::from_raw_parts(ptr, count))
}

/// Returns the library version as a static NUL-terminated string.
/// The pointer is valid for the lifetime of the process; do not free it.
#[no_mangle]
pub extern "C" fn vlcdsm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Returns the error message from the most recent failed call on the current
/// thread as a NUL-terminated UTF-8 string, or an empty string if nothing has
/// failed yet. The pointer stays valid until the next failing call on the
/// same thread; do not free it.
#[no_mangle]
pub extern "C" fn vlcdsm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Creates a configuration populated with the library defaults: 256
/// subcarrier slots at 15 kHz spacing, QPSK, 8x oversampling, fourth-order
/// shaping at peak gain 1.5, LED model enabled, 100 frames.
/// Release the handle with `vlcdsm_config_free`.
#[no_mangle]
pub extern "C" fn vlcdsm_config_new() -> *mut VlcdsmConfig {
    Box::into_raw(Box::new(VlcdsmConfig {
        inner: LinkConfig::default(),
    }))
}

/// Releases a configuration handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_config_free(config: *mut VlcdsmConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Sets one configuration field by name, using the same key/value strings
/// the CLI accepts in configuration files — for example `("osr", "16")`,
/// `("led_enabled", "false")`, or `("snr_db", "none")`. On failure the
/// configuration is left unchanged and the reason is available from
/// `vlcdsm_last_error_message`.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_config_set(
    config: *mut VlcdsmConfig,
    key: *const c_char,
    value: *const c_char,
) -> VlcdsmStatus {
    let Some(config) = config.as_mut() else {
        return null_argument("config");
    };
    let key = match utf8_arg(key, "key") {
        Ok(key) => key,
        Err(status) => return status,
    };
    let value = match utf8_arg(value, "value") {
        Ok(value) => value,
        Err(status) => return status,
    };
    match config.inner.set_field(key, value) {
        Ok(()) => VlcdsmStatus::Ok,
        Err(err) => status_for(&err),
    }
}

/// Checks the configuration for internal consistency without running
/// anything. Returns `VLCDSM_STATUS_OK` when a run would accept it.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_config_validate(config: *const VlcdsmConfig) -> VlcdsmStatus {
    let Some(config) = config.as_ref() else {
        return null_argument("config");
    };
    match config.inner.validate() {
        Ok(()) => VlcdsmStatus::Ok,
        Err(err) => status_for(&err),
    }
}

/// Runs the complete link once and hands back a report through `out`.
/// On failure `*out` is set to null and the corresponding status is
/// returned. Release the report with `vlcdsm_report_free`.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_link_run(
    config: *const VlcdsmConfig,
    out: *mut *mut VlcdsmReport,
) -> VlcdsmStatus {
    let Some(out) = out.as_mut() else {
        return null_argument("out");
    };
    *out = std::ptr::null_mut();
    let Some(config) = config.as_ref() else {
        return null_argument("config");
    };
    match run_link(&config.inner) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(VlcdsmReport { inner: report }));
            VlcdsmStatus::Ok
        }
        Err(err) => status_for(&err),
    }
}

/// Releases a report handle. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_free(report: *mut VlcdsmReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

unsafe fn report_metric(report: *const VlcdsmReport, pick: fn(&LinkReport) -> f64) -> f64 {
    match report.as_ref() {
        Some(report) => pick(&report.inner),
        None => f64::NAN,
    }
}

/// Error vector magnitude in percent, measured at the modulator output
/// before the LED stage. NaN if `report` is null.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_evm_percent(report: *const VlcdsmReport) -> f64 {
    report_metric(report, |r| r.evm_percent)
}

/// EVM in percent after the LED and the one-tap equalizer. NaN when the run
/// had no LED stage or `report` is null.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_evm_equalized_percent(
    report: *const VlcdsmReport,
) -> f64 {
    report_metric(report, |r| r.evm_equalized_percent.unwrap_or(f64::NAN))
}

/// Bit error ratio over all frames, from the decision path the run actually
/// used (equalized LED output when the LED stage is enabled, otherwise the
/// modulator output). NaN if `report` is null.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_ber(report: *const VlcdsmReport) -> f64 {
    report_metric(report, |r| r.ber)
}

/// Mean peak-to-average power ratio of the transmitted frames in dB.
/// NaN if `report` is null.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_papr_db_mean(report: *const VlcdsmReport) -> f64 {
    report_metric(report, |r| r.papr_db_mean)
}

/// Fraction of frames whose modulator loop stayed within its clip budget.
/// NaN if `report` is null.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_stable_fraction(report: *const VlcdsmReport) -> f64 {
    report_metric(report, |r| r.stable_fraction)
}

/// Sample rate of the oversampled waveforms in hertz. NaN if `report` is
/// null.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_sample_rate_hz(report: *const VlcdsmReport) -> f64 {
    report_metric(report, |r| r.sample_rate_hz)
}

/// Number of samples in the modulator output held by the report
/// (frames x oversampling x subcarrier slots). 0 if `report` is null.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_output_len(report: *const VlcdsmReport) -> usize {
    report
        .as_ref()
        .map_or(0, |r| r.inner.modulator_output.samples.len())
}

/// Copies up to `capacity` samples of the two-level modulator output into
/// `buffer` and returns the number copied. Returns 0 if either pointer is
/// null. `buffer` must point at at least `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_copy_output(
    report: *const VlcdsmReport,
    buffer: *mut f64,
    capacity: usize,
) -> usize {
    let Some(report) = report.as_ref() else {
        return 0;
    };
    if buffer.is_null() {
        return 0;
    }
    let samples = &report.inner.modulator_output.samples;
    let count = samples.len().min(capacity);
    std::ptr::copy_nonoverlapping(samples.as_ptr(), buffer, count);
    count
}

/// Renders the report's scalar metrics as a CSV string (the same table the
/// CLI `link` verb prints) and returns it through `out_csv`. Release the
/// string with `vlcdsm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_report_csv(
    report: *const VlcdsmReport,
    out_csv: *mut *mut c_char,
) -> VlcdsmStatus {
    let Some(out_csv) = out_csv.as_mut() else {
        return null_argument("out_csv");
    };
    *out_csv = std::ptr::null_mut();
    let Some(report) = report.as_ref() else {
        return null_argument("report");
    };
    export_string(render_link_csv(&report.inner), out_csv)
}

/// Runs an EVM sweep over the cross product of `osr_list` and `order_list`
/// and returns the result table as a CSV string through `out_csv`. The base
/// configuration supplies every other parameter; each grid cell runs with a
/// deterministic per-cell seed derived from the base seed, so identical
/// inputs always produce byte-identical tables. Release the string with
/// `vlcdsm_string_free`.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_sweep_csv(
    config: *const VlcdsmConfig,
    osr_list: *const u32,
    osr_count: usize,
    order_list: *const u32,
    order_count: usize,
    out_csv: *mut *mut c_char,
) -> VlcdsmStatus {
    let Some(out_csv) = out_csv.as_mut() else {
        return null_argument("out_csv");
    };
    *out_csv = std::ptr::null_mut();
    let Some(config) = config.as_ref() else {
        return null_argument("config");
    };
    let osr = match list_arg(osr_list, osr_count, "osr_list") {
        Ok(list) => list.iter().map(|&v| v as usize).collect::<Vec<_>>(),
        Err(status) => return status,
    };
    let orders = match list_arg(order_list, order_count, "order_list") {
        Ok(list) => list.iter().map(|&v| v as usize).collect::<Vec<_>>(),
        Err(status) => return status,
    };
    match sweep_evm(&config.inner, &osr, &orders) {
        Ok(result) => export_string(render_sweep_csv(&result), out_csv),
        Err(err) => status_for(&err),
    }
}

/// Releases a string returned by this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn vlcdsm_string_free(string: *mut c_char) {
    if !string.is_null() {
        drop(CString::from_raw(string));
    }
}

fn export_string(text: String, out: &mut *mut c_char) -> VlcdsmStatus {
    match CString::new(text) {
        Ok(cstring) => {
            *out = cstring.into_raw();
            VlcdsmStatus::Ok
        }
        Err(_) => {
            record_error("rendered table contained an interior NUL byte");
            VlcdsmStatus::InternalError
        }
    }
}
