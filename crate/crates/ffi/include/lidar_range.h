#ifndef LIDAR_RANGE_H
#define LIDAR_RANGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LrStatus {
  LR_STATUS_OK = 0,
  LR_STATUS_NULL_POINTER = 1,
  LR_STATUS_INVALID_ARGUMENT = 2,
  LR_STATUS_PARSE_ERROR = 3,
  LR_STATUS_IO_ERROR = 4,
  LR_STATUS_SATURATION = 5,
  LR_STATUS_NO_DETECTION = 6,
  LR_STATUS_UNBOUNDED_RANGE = 7,
  LR_STATUS_UNKNOWN_PARAMETER = 8,
  LR_STATUS_ZERO_PARAMETER = 9,
  LR_STATUS_PANIC = 10,
} LrStatus;

typedef enum LrDetector {
  LR_DETECTOR_APD = 0,
  LR_DETECTOR_SIPM = 1,
} LrDetector;

typedef enum LrSipmMode {
  LR_SIPM_MODE_ANALYTIC = 0,
  LR_SIPM_MODE_APPROX = 1,
  LR_SIPM_MODE_MONTE_CARLO = 2,
} LrSipmMode;

/**
 * Opaque scenario handle.
 */
typedef struct LrScenario LrScenario;

typedef struct LrRangeResult {
  double r_max_m;
  double snr_at_rmax;
  double min_detectable_power_w;
  double background_power_w;
  /**
   * Zero unless the SiPM is evaluated by Monte Carlo.
   */
  double snr_std_error;
  uint32_t iterations;
} LrRangeResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Reference design with the given detector (SiPM in analytic mode).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum LrStatus lr_scenario_table1(enum LrDetector detector, struct LrScenario **out);

/**
 * Loads and validates a scenario TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum LrStatus lr_scenario_load(const char *path, struct LrScenario **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `scenario` must come from this library and not be used afterwards.
 */
void lr_scenario_free(struct LrScenario *scenario);

/**
 * Independent copy of a handle.
 *
 * # Safety
 * `scenario` must be a live handle; `out` a valid handle slot.
 */
enum LrStatus lr_scenario_clone(const struct LrScenario *scenario, struct LrScenario **out);

/**
 * Sets a named design parameter (SI units, angles in radians). The
 * scenario is left unchanged when the new value is invalid.
 *
 * # Safety
 * `scenario` must be a live handle; `name` a NUL-terminated string.
 */
enum LrStatus lr_scenario_set_param(struct LrScenario *scenario, const char *name, double value);

/**
 * Reads a named design parameter.
 *
 * # Safety
 * `scenario` must be a live handle; `name` a NUL-terminated string;
 * `out` a valid pointer.
 */
enum LrStatus lr_scenario_get_param(const struct LrScenario *scenario,
                                    const char *name,
                                    double *out);

/**
 * Selects how a SiPM scenario evaluates its SNR. `seed` is used in Monte
 * Carlo mode, which runs with default simulation settings.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum LrStatus lr_scenario_set_sipm_mode(struct LrScenario *scenario,
                                        enum LrSipmMode mode,
                                        uint64_t seed);

/**
 * Trigger SNR with the target at `range_m`.
 *
 * # Safety
 * `scenario` must be a live handle; `out` a valid pointer.
 */
enum LrStatus lr_snr_at_range(const struct LrScenario *scenario, double range_m, double *out);

/**
 * Maximum detectable range under the scenario's threshold policy.
 *
 * # Safety
 * `scenario` must be a live handle; `out` a valid pointer.
 */
enum LrStatus lr_max_range(const struct LrScenario *scenario, struct LrRangeResult *out);

/**
 * Photon-limited closed-form maximum range.
 *
 * # Safety
 * `scenario` must be a live handle; `out` a valid pointer.
 */
enum LrStatus lr_closed_form_max_range(const struct LrScenario *scenario, double *out);

/**
 * Elasticity d ln R_max / d ln parameter.
 *
 * # Safety
 * `scenario` must be a live handle; `name` a NUL-terminated string;
 * `out` a valid pointer.
 */
enum LrStatus lr_sensitivity(const struct LrScenario *scenario,
                             const char *name,
                             double rel_step,
                             double *out);

/**
 * APD gain in `[gain_min, gain_max]` maximising the SNR at `range_m`.
 *
 * # Safety
 * `scenario` must be a live handle; `gain_out` and `snr_out` valid pointers.
 */
enum LrStatus lr_optimize_gain(const struct LrScenario *scenario,
                               double range_m,
                               double gain_min,
                               double gain_max,
                               double *gain_out,
                               double *snr_out);

/**
 * Per-comparison false-alarm probability at threshold `tnr`.
 */
double lr_false_alarm_prob(double tnr);

/**
 * Probability that the first trigger in the window is the echo. NaN for
 * invalid arguments.
 */
double lr_correct_detection_prob(double tnr, double window_s, double bandwidth_hz, double p_detect);

/**
 * Expected fired pixels of a SiPM for `n_photon` incident photons. NaN
 * for invalid arguments.
 */
double lr_fired_count(uint32_t n_pixels, double pde, double n_photon);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * without the terminator; zero when the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t lr_last_error_message(char *buf, size_t len);

/**
 * Library version, a static NUL-terminated string.
 */
const char *lr_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIDAR_RANGE_H */
