#ifndef BPS_VORTEX_H
#define BPS_VORTEX_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BpsStatus {
  BPS_STATUS_OK = 0,
  BPS_STATUS_NULL_POINTER = 1,
  BPS_STATUS_INVALID_ARGUMENT = 2,
  BPS_STATUS_THRESHOLD_VIOLATED = 3,
  BPS_STATUS_NOT_CONVERGED = 4,
  BPS_STATUS_NOT_SOLVED = 5,
  BPS_STATUS_BUFFER_TOO_SMALL = 6,
  BPS_STATUS_INTERNAL = 7,
} BpsStatus;

typedef enum BpsModel {
  BPS_MODEL_BASE = 0,
  BPS_MODEL_EXTENDED = 1,
} BpsModel;

/**
 * Opaque run handle.
 */
typedef struct BpsRun BpsRun;

/**
 * Result of [`bps_check_existence`].
 */
typedef struct BpsThreshold {
  double first;
  double second;
  double margin;
  bool solvable;
} BpsThreshold;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *bps_last_error(void);

/**
 * Torus existence test for `n` zeros of `phi` and `m` zeros of `kappa`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one `BpsThreshold`.
 */
enum BpsStatus bps_check_existence(enum BpsModel model,
                                   double lambda,
                                   double area,
                                   size_t n,
                                   size_t m,
                                   struct BpsThreshold *out);

/**
 * Parses a JSON run configuration into a new handle.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BpsStatus bps_run_new(const char *config_json, struct BpsRun **out);

/**
 * Solves the configured problem with the configured method.
 *
 * A report is available afterwards even when the status is
 * `ThresholdViolated` or `NotConverged`.
 *
 * # Safety
 * `run` must be a handle from [`bps_run_new`].
 */
enum BpsStatus bps_run_solve(struct BpsRun *run);

/**
 * Number of grid nodes, i.e. the length of every field.
 *
 * # Safety
 * `run` must be a handle from [`bps_run_new`]; `out` a valid pointer.
 */
enum BpsStatus bps_run_node_count(const struct BpsRun *run, size_t *out);

/**
 * Copies the named field (`u`, `v`, `kappa`, `phi_abs`, `a12`, `b12`) of the
 * solution into `buf`, row-major.
 *
 * # Safety
 * `run` must be a handle from [`bps_run_new`], `name` a NUL-terminated
 * string and `buf` writable for `len` doubles.
 */
enum BpsStatus bps_run_field(const struct BpsRun *run, const char *name, double *buf, size_t len);

/**
 * The run report as JSON. Free the string with [`bps_string_free`].
 *
 * # Safety
 * `run` must be a handle from [`bps_run_new`]; `out` a valid pointer.
 */
enum BpsStatus bps_run_report_json(const struct BpsRun *run, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed at most once.
 */
void bps_string_free(char *s);

/**
 * # Safety
 * `run` must be null or a handle from [`bps_run_new`], freed at most once.
 */
void bps_run_free(struct BpsRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BPS_VORTEX_H */
