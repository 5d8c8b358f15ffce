#ifndef SHADOWTOMO_H
#define SHADOWTOMO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ShadowtomoStatus {
  SHADOWTOMO_STATUS_OK = 0,
  SHADOWTOMO_STATUS_NULL_POINTER = 1,
  SHADOWTOMO_STATUS_INVALID_ARGUMENT = 2,
  SHADOWTOMO_STATUS_DIMENSION = 3,
  SHADOWTOMO_STATUS_NON_FINITE = 4,
  SHADOWTOMO_STATUS_EXTENT_CAP = 5,
  SHADOWTOMO_STATUS_INCOMPLETE_ENSEMBLE = 6,
  SHADOWTOMO_STATUS_PARSE = 7,
  SHADOWTOMO_STATUS_INSUFFICIENT_POINTS = 8,
  SHADOWTOMO_STATUS_MISMATCH = 9,
  SHADOWTOMO_STATUS_EMPTY_STORE = 10,
  SHADOWTOMO_STATUS_IO = 11,
  SHADOWTOMO_STATUS_PANIC = 12,
} ShadowtomoStatus;

/**
 * Opaque reconstruction coefficients.
 */
typedef struct ShadowtomoReconstruction ShadowtomoReconstruction;

/**
 * Opaque snapshot collection.
 */
typedef struct ShadowtomoSnapshots ShadowtomoSnapshots;

/**
 * Summary of one estimate.
 */
typedef struct ShadowtomoEstimate {
  double estimate;
  double variance;
  double std_error;
  size_t samples;
} ShadowtomoEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL. Valid until the next failing call.
 */
const char *shadowtomo_last_error(void);

/**
 * Sample `samples` snapshots of a built-in state (a [`ShadowtomoState`] value)
 * through depth-`depth` circuits.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to free with
 * [`shadowtomo_snapshots_free`].
 */
enum ShadowtomoStatus shadowtomo_sample(uint32_t state,
                                        size_t n,
                                        size_t depth,
                                        size_t samples,
                                        uint64_t seed,
                                        struct ShadowtomoSnapshots **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ShadowtomoStatus shadowtomo_snapshots_read(const char *path, struct ShadowtomoSnapshots **out);

/**
 * # Safety
 * `snapshots` must be a live handle and `path` a NUL-terminated string.
 */
enum ShadowtomoStatus shadowtomo_snapshots_write(const struct ShadowtomoSnapshots *snapshots,
                                                 const char *path);

/**
 * Number of snapshots, or 0 for NULL.
 *
 * # Safety
 * `snapshots` must be NULL or a live handle.
 */
size_t shadowtomo_snapshots_len(const struct ShadowtomoSnapshots *snapshots);

/**
 * # Safety
 * `snapshots` must be NULL or a handle not yet freed.
 */
void shadowtomo_snapshots_free(struct ShadowtomoSnapshots *snapshots);

/**
 * Closed-form coefficients; `kind` is a [`ShadowtomoClosedForm`] value.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ShadowtomoStatus shadowtomo_reconstruction_closed_form(uint32_t kind,
                                                            size_t n,
                                                            struct ShadowtomoReconstruction **out);

/**
 * Solve the reconstruction coefficients for depth `depth` (warm-started from depth 0
 * upward). `ef_bond = 0` keeps the EF exact. `achieved_loss` may be NULL.
 *
 * # Safety
 * `out` must be a valid pointer; `achieved_loss` NULL or valid.
 */
enum ShadowtomoStatus shadowtomo_reconstruction_solve(size_t n,
                                                      size_t depth,
                                                      size_t ef_bond,
                                                      size_t r_bond,
                                                      double tol,
                                                      size_t max_iters,
                                                      struct ShadowtomoReconstruction **out,
                                                      double *achieved_loss);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ShadowtomoStatus shadowtomo_reconstruction_read(const char *path,
                                                     struct ShadowtomoReconstruction **out);

/**
 * # Safety
 * `r` must be a live handle and `path` a NUL-terminated string.
 */
enum ShadowtomoStatus shadowtomo_reconstruction_write(const struct ShadowtomoReconstruction *r,
                                                      const char *path);

/**
 * Coefficient `r_A` for the subset whose bit `i` marks site `i`.
 *
 * # Safety
 * `r` must be a live handle and `value` a valid pointer.
 */
enum ShadowtomoStatus shadowtomo_reconstruction_coefficient(const struct ShadowtomoReconstruction *r,
                                                            uint64_t mask,
                                                            double *value);

/**
 * # Safety
 * `r` must be NULL or a handle not yet freed.
 */
void shadowtomo_reconstruction_free(struct ShadowtomoReconstruction *r);

/**
 * Estimate a Pauli string such as `"ZZIIII"`; `groups = 0` averages, otherwise
 * median of means over `groups` groups.
 *
 * # Safety
 * Handles must be live, `pauli` NUL-terminated, `out` valid.
 */
enum ShadowtomoStatus shadowtomo_estimate_pauli(const struct ShadowtomoSnapshots *snapshots,
                                                const struct ShadowtomoReconstruction *r,
                                                const char *pauli,
                                                size_t groups,
                                                struct ShadowtomoEstimate *out);

/**
 * Fidelity with a stabilizer reference given as `"+ZZI;+IZZ;+XXX"`.
 *
 * # Safety
 * Handles must be live, `generators` NUL-terminated, `out` valid.
 */
enum ShadowtomoStatus shadowtomo_estimate_fidelity(const struct ShadowtomoSnapshots *snapshots,
                                                   const struct ShadowtomoReconstruction *r,
                                                   const char *generators,
                                                   size_t groups,
                                                   struct ShadowtomoEstimate *out);

/**
 * Shadow norm of a Pauli string at depth `depth` from the EF alone; `ef_bond = 0`
 * keeps the EF exact.
 *
 * # Safety
 * `pauli` must be NUL-terminated and `norm` valid.
 */
enum ShadowtomoStatus shadowtomo_pauli_shadow_norm(const char *pauli,
                                                   size_t depth,
                                                   size_t ef_bond,
                                                   double *norm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHADOWTOMO_H */
