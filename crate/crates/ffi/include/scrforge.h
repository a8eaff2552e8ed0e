#ifndef SCRFORGE_H
#define SCRFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScrStatus {
  SCR_STATUS_OK = 0,
  SCR_STATUS_NULL_POINTER = 1,
  SCR_STATUS_INVALID_INPUT = 2,
  SCR_STATUS_NUMERICAL_FAILURE = 3,
  SCR_STATUS_RESOURCE_LIMIT = 4,
  SCR_STATUS_IO = 5,
  SCR_STATUS_BUFFER_TOO_SMALL = 6,
  SCR_STATUS_PANIC = 7,
} ScrStatus;

/**
 * Construction report of [`scr_approximate`].
 */
typedef struct ScrReport ScrReport;

/**
 * A linear reservoir `(W, V, A)` with its input bound.
 */
typedef struct ScrReservoir ScrReservoir;

/**
 * A simple cycle reservoir.
 */
typedef struct ScrSystem ScrSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into this library on the same thread.
 */
const char *scr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *scr_version(void);

/**
 * Creates a reservoir from row-major `w` (n x n), `v` (n x m) and `a`
 * (d x n). Requires `||W|| < 1`.
 *
 * # Safety
 * The buffers must hold the stated number of values and `out` must be
 * writable.
 */
enum ScrStatus scr_reservoir_new(size_t n,
                                 size_t m,
                                 size_t d,
                                 const double *w,
                                 const double *v,
                                 const double *a,
                                 double input_bound,
                                 struct ScrReservoir **out);

/**
 * Loads a reservoir directory (manifest.txt, coupling.csv, input.csv,
 * readout.csv).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum ScrStatus scr_reservoir_load(const char *path, struct ScrReservoir **out);

/**
 * # Safety
 * `r` must be a live handle and `path` a NUL-terminated string.
 */
enum ScrStatus scr_reservoir_save(const struct ScrReservoir *r, const char *path);

/**
 * # Safety
 * `r` must come from this library and not be used afterwards. NULL is
 * ignored.
 */
void scr_reservoir_free(struct ScrReservoir *r);

/**
 * # Safety
 * `r` must be a live handle; the out pointers may be NULL.
 */
enum ScrStatus scr_reservoir_dims(const struct ScrReservoir *r,
                                  size_t *state_dim,
                                  size_t *input_dim,
                                  size_t *output_dim,
                                  double *lambda);

/**
 * Drives the reservoir from rest with `steps` row-major inputs and writes
 * the `(steps - washout) x d` post-washout outputs.
 *
 * # Safety
 * `inputs` must hold `steps * m` values, `outputs` `outputs_len` values.
 */
enum ScrStatus scr_reservoir_run(const struct ScrReservoir *r,
                                 const double *inputs,
                                 size_t steps,
                                 size_t washout,
                                 double *outputs,
                                 size_t outputs_len);

/**
 * Approximates `r` within `epsilon` by a simple cycle reservoir,
 * validating on `streams` uniform streams of length `length`.
 *
 * # Safety
 * `r` must be a live handle; `out_system` and `out_report` writable.
 */
enum ScrStatus scr_approximate(const struct ScrReservoir *r,
                               double epsilon,
                               size_t streams,
                               size_t length,
                               uint64_t seed,
                               struct ScrSystem **out_system,
                               struct ScrReport **out_report);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. NULL is
 * ignored.
 */
void scr_system_free(struct ScrSystem *s);

/**
 * Loads a directory written by [`scr_system_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum ScrStatus scr_system_load(const char *path, struct ScrSystem **out);

/**
 * # Safety
 * `s` must be a live handle and `path` a NUL-terminated string.
 */
enum ScrStatus scr_system_save(const struct ScrSystem *s, const char *path);

/**
 * # Safety
 * `s` must be a live handle; the out pointers may be NULL.
 */
enum ScrStatus scr_system_dims(const struct ScrSystem *s,
                               size_t *n_scr,
                               size_t *input_dim,
                               size_t *output_dim,
                               double *lambda);

/**
 * Copies the row-major `n_scr x m` input signs (each -1 or +1).
 *
 * # Safety
 * `buf` must hold `len` values.
 */
enum ScrStatus scr_system_signs(const struct ScrSystem *s, int8_t *buf, size_t len);

/**
 * Copies the row-major `d x n_scr` readout.
 *
 * # Safety
 * `buf` must hold `len` values.
 */
enum ScrStatus scr_system_readout(const struct ScrSystem *s, double *buf, size_t len);

/**
 * Same contract as [`scr_reservoir_run`].
 *
 * # Safety
 * See [`scr_reservoir_run`].
 */
enum ScrStatus scr_system_run(const struct ScrSystem *s,
                              const double *inputs,
                              size_t steps,
                              size_t washout,
                              double *outputs,
                              size_t outputs_len);

/**
 * # Safety
 * `rep` must come from this library and not be used afterwards. NULL is
 * ignored.
 */
void scr_report_free(struct ScrReport *rep);

/**
 * Numeric report field by key (e.g. `"empirical_output_gap"`, `"n_c"`).
 *
 * # Safety
 * `rep` must be a live handle, `key` a NUL-terminated string, `out`
 * writable.
 */
enum ScrStatus scr_report_get(const struct ScrReport *rep, const char *key, double *out);

/**
 * Writes the report as `key = value` lines into `buf` (NUL-terminated).
 * `needed` receives the required size including the terminator.
 *
 * # Safety
 * `buf` must hold `len` bytes (may be NULL when `len` is 0).
 */
enum ScrStatus scr_report_text(const struct ScrReport *rep, char *buf, size_t len, size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCRFORGE_H */
