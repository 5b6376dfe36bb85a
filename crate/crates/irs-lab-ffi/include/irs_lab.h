/* C interface to the irs-lab active-surface MIMO simulator. */

#ifndef IRS_LAB_H
#define IRS_LAB_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Anything but `Ok` leaves a description in
 * [`irs_lab_last_error`].
 */
typedef enum IrsLabStatus {
  IRS_LAB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  IRS_LAB_STATUS_NULL_POINTER = 1,
  /**
   * An input string was not valid UTF-8.
   */
  IRS_LAB_STATUS_INVALID_UTF8 = 2,
  /**
   * JSON was malformed or the described configuration is invalid.
   */
  IRS_LAB_STATUS_INVALID_CONFIG = 3,
  /**
   * The computation itself failed (infeasible geometry, numerics, …).
   */
  IRS_LAB_STATUS_COMPUTE_FAILED = 4,
} IrsLabStatus;

/**
 * Opaque handle around a validated system configuration.
 */
typedef struct IrsLabConfig IrsLabConfig;

/**
 * Description of the most recent failure on the calling thread. The pointer
 * stays valid until the next failing call on the same thread; never freed by
 * the caller.
 */
const char *irs_lab_last_error(void);

/**
 * Static library version string; never freed by the caller.
 */
const char *irs_lab_version(void);

/**
 * Static name of a status code; never freed by the caller.
 */
const char *irs_lab_status_name(enum IrsLabStatus status);

/**
 * Parse and validate a system configuration from JSON, returning an owned
 * handle through `out`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string; `out` must be a valid
 * writable pointer. On success the handle must be released with
 * [`irs_lab_config_free`].
 */
enum IrsLabStatus irs_lab_config_parse(const char *json, struct IrsLabConfig **out);

/**
 * Release a handle returned by [`irs_lab_config_parse`]. Null is a no-op.
 *
 * # Safety
 * `cfg` must be a pointer previously returned by [`irs_lab_config_parse`]
 * and not yet freed.
 */
void irs_lab_config_free(struct IrsLabConfig *cfg);

/**
 * Release a string returned through any out-pointer here. Null is a no-op.
 *
 * # Safety
 * `s` must be a string pointer previously produced by this library and not
 * yet freed.
 */
void irs_lab_string_free(char *s);

/**
 * Orthogonal-complement steering angle (degrees) for a transmit direction
 * `theta_bkt_deg`, integer offset `i`, `m` antennas and element spacing
 * `d_over_lambda`. Writes the angle to `out_deg`.
 *
 * # Safety
 * `out_deg` must be a valid writable pointer.
 */
enum IrsLabStatus irs_lab_oc_angle(double theta_bkt_deg,
                                   int64_t i,
                                   size_t m,
                                   double d_over_lambda,
                                   double *out_deg);

/**
 * Rank/bound report for a configuration as a JSON string (the `dof-check`
 * CLI payload): best effective rank over `trials` random reflections, the
 * derived upper bound, the bound case, and the no-surface rank.
 *
 * # Safety
 * `cfg` must be a live handle from [`irs_lab_config_parse`]; `out_json` must
 * be a valid writable pointer. The returned string must be released with
 * [`irs_lab_string_free`].
 */
enum IrsLabStatus irs_lab_dof_report_json(const struct IrsLabConfig *cfg,
                                          size_t trials,
                                          uint64_t master_seed,
                                          char **out_json);

/**
 * Run a full sweep described by a JSON spec and return the result as CSV
 * text — byte-identical to the `sweep` CLI output for the same spec.
 *
 * # Safety
 * `spec_json` must be a valid NUL-terminated string; `out_csv` must be a
 * valid writable pointer. The returned string must be released with
 * [`irs_lab_string_free`].
 */
enum IrsLabStatus irs_lab_sweep_csv(const char *spec_json, char **out_csv);

#endif  /* IRS_LAB_H */
