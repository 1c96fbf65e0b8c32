#ifndef VLCDSM_H
#define VLCDSM_H

/* Generated by the vlcdsm-ffi build script. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every fallible function in this library.
 */
typedef enum VlcdsmStatus {
  /**
   * The call succeeded.
   */
  VLCDSM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  VLCDSM_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  VLCDSM_STATUS_INVALID_STRING = 2,
  /**
   * A configuration key, value, or parameter combination was rejected.
   */
  VLCDSM_STATUS_INVALID_PARAMETER = 3,
  /**
   * The noise-shaping filter design could not be realized.
   */
  VLCDSM_STATUS_SYNTHESIS_FAILURE = 4,
  /**
   * An internal consistency check failed; this indicates a bug.
   */
  VLCDSM_STATUS_INTERNAL_ERROR = 5,
} VlcdsmStatus;

/**
 * Opaque link configuration handle.
 */
typedef struct VlcdsmConfig VlcdsmConfig;

/**
 * Opaque handle to the results of one completed link run.
 */
typedef struct VlcdsmReport VlcdsmReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 * The pointer is valid for the lifetime of the process; do not free it.
 */
const char *vlcdsm_version(void);

/**
 * Returns the error message from the most recent failed call on the current
 * thread as a NUL-terminated UTF-8 string, or an empty string if nothing has
 * failed yet. The pointer stays valid until the next failing call on the
 * same thread; do not free it.
 */
const char *vlcdsm_last_error_message(void);

/**
 * Creates a configuration populated with the library defaults: 256
 * subcarrier slots at 15 kHz spacing, QPSK, 8x oversampling, fourth-order
 * shaping at peak gain 1.5, LED model enabled, 100 frames.
 * Release the handle with `vlcdsm_config_free`.
 */
struct VlcdsmConfig *vlcdsm_config_new(void);

/**
 * Releases a configuration handle. Null is ignored.
 */
void vlcdsm_config_free(struct VlcdsmConfig *config);

/**
 * Sets one configuration field by name, using the same key/value strings
 * the CLI accepts in configuration files — for example `("osr", "16")`,
 * `("led_enabled", "false")`, or `("snr_db", "none")`. On failure the
 * configuration is left unchanged and the reason is available from
 * `vlcdsm_last_error_message`.
 */
enum VlcdsmStatus vlcdsm_config_set(struct VlcdsmConfig *config,
                                    const char *key,
                                    const char *value);

/**
 * Checks the configuration for internal consistency without running
 * anything. Returns `VLCDSM_STATUS_OK` when a run would accept it.
 */
enum VlcdsmStatus vlcdsm_config_validate(const struct VlcdsmConfig *config);

/**
 * Runs the complete link once and hands back a report through `out`.
 * On failure `*out` is set to null and the corresponding status is
 * returned. Release the report with `vlcdsm_report_free`.
 */
enum VlcdsmStatus vlcdsm_link_run(const struct VlcdsmConfig *config, struct VlcdsmReport **out);

/**
 * Releases a report handle. Null is ignored.
 */
void vlcdsm_report_free(struct VlcdsmReport *report);

/**
 * Error vector magnitude in percent, measured at the modulator output
 * before the LED stage. NaN if `report` is null.
 */
double vlcdsm_report_evm_percent(const struct VlcdsmReport *report);

/**
 * EVM in percent after the LED and the one-tap equalizer. NaN when the run
 * had no LED stage or `report` is null.
 */
double vlcdsm_report_evm_equalized_percent(const struct VlcdsmReport *report);

/**
 * Bit error ratio over all frames, from the decision path the run actually
 * used (equalized LED output when the LED stage is enabled, otherwise the
 * modulator output). NaN if `report` is null.
 */
double vlcdsm_report_ber(const struct VlcdsmReport *report);

/**
 * Mean peak-to-average power ratio of the transmitted frames in dB.
 * NaN if `report` is null.
 */
double vlcdsm_report_papr_db_mean(const struct VlcdsmReport *report);

/**
 * Fraction of frames whose modulator loop stayed within its clip budget.
 * NaN if `report` is null.
 */
double vlcdsm_report_stable_fraction(const struct VlcdsmReport *report);

/**
 * Sample rate of the oversampled waveforms in hertz. NaN if `report` is
 * null.
 */
double vlcdsm_report_sample_rate_hz(const struct VlcdsmReport *report);

/**
 * Number of samples in the modulator output held by the report
 * (frames x oversampling x subcarrier slots). 0 if `report` is null.
 */
size_t vlcdsm_report_output_len(const struct VlcdsmReport *report);

/**
 * Copies up to `capacity` samples of the two-level modulator output into
 * `buffer` and returns the number copied. Returns 0 if either pointer is
 * null. `buffer` must point at at least `capacity` writable doubles.
 */
size_t vlcdsm_report_copy_output(const struct VlcdsmReport *report,
                                 double *buffer,
                                 size_t capacity);

/**
 * Renders the report's scalar metrics as a CSV string (the same table the
 * CLI `link` verb prints) and returns it through `out_csv`. Release the
 * string with `vlcdsm_string_free`.
 */
enum VlcdsmStatus vlcdsm_report_csv(const struct VlcdsmReport *report, char **out_csv);

/**
 * Runs an EVM sweep over the cross product of `osr_list` and `order_list`
 * and returns the result table as a CSV string through `out_csv`. The base
 * configuration supplies every other parameter; each grid cell runs with a
 * deterministic per-cell seed derived from the base seed, so identical
 * inputs always produce byte-identical tables. Release the string with
 * `vlcdsm_string_free`.
 */
enum VlcdsmStatus vlcdsm_sweep_csv(const struct VlcdsmConfig *config,
                                   const uint32_t *osr_list,
                                   size_t osr_count,
                                   const uint32_t *order_list,
                                   size_t order_count,
                                   char **out_csv);

/**
 * Releases a string returned by this library. Null is ignored.
 */
void vlcdsm_string_free(char *string);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* VLCDSM_H */
