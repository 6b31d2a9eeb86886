#ifndef DARBOUX_CONN_H
#define DARBOUX_CONN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of apparent singularities, and of canonical coordinate pairs.
 */
#define DC_N_APPARENT 3

typedef enum DcStatus {
  DC_STATUS_OK = 0,
  /**
   * The computation ran but a check did not pass.
   */
  DC_STATUS_VERIFICATION_FAILED = 1,
  DC_STATUS_INVALID_INPUT = 2,
  DC_STATUS_NEAR_SINGULAR = 3,
  DC_STATUS_OFF_CURVE = 4,
  DC_STATUS_NULL_POINTER = 5,
  /**
   * A panic or other unexpected failure inside the library.
   */
  DC_STATUS_INTERNAL = 6,
} DcStatus;

/**
 * A solved companion form.
 */
typedef struct DcCompanion DcCompanion;

/**
 * A parsed and validated problem.
 */
typedef struct DcProblem DcProblem;

typedef struct DcComplex {
  double re;
  double im;
} DcComplex;

/**
 * Residue parameters and accessory parameters of a companion form.
 */
typedef struct DcCompanionParams {
  struct DcComplex a1;
  struct DcComplex a2;
  struct DcComplex a3;
  struct DcComplex a4;
  struct DcComplex b1;
  struct DcComplex b2;
  struct DcComplex b3;
} DcCompanionParams;

/**
 * One canonical coordinate pair `(q_j, p_j)` with `q_j = (u, v)`.
 */
typedef struct DcCanonicalPoint {
  struct DcComplex u;
  struct DcComplex v;
  struct DcComplex p;
} DcCanonicalPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a problem file (JSON text) into a new handle stored in `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DcStatus dc_problem_from_json(const char *json, struct DcProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from [`dc_problem_from_json`] not yet freed.
 */
void dc_problem_free(struct DcProblem *problem);

/**
 * Solves the companion form of `problem`, checking its residue and
 * apparency conditions.
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum DcStatus dc_companion_build(const struct DcProblem *problem, struct DcCompanion **out);

/**
 * # Safety
 * `companion` and `out` must be valid pointers.
 */
enum DcStatus dc_companion_params(const struct DcCompanion *companion,
                                  struct DcCompanionParams *out);

/**
 * # Safety
 * `companion` must be null or a handle from [`dc_companion_build`] not yet freed.
 */
void dc_companion_free(struct DcCompanion *companion);

/**
 * Computes the canonical coordinates of `problem`, writing
 * [`DC_N_APPARENT`] points to `out`.
 *
 * # Safety
 * `problem` must be a live handle and `out` must have room for
 * [`DC_N_APPARENT`] points.
 */
enum DcStatus dc_forward_map(const struct DcProblem *problem, struct DcCanonicalPoint *out);

/**
 * Runs a CLI command (`solve`, `verify`, `coords`, `invert`, `symp-check`)
 * on the JSON text `input`. `args` holds `n_args` extra flags, e.g.
 * `"--seed", "7"`. The report is stored in `*report` (free with
 * [`dc_string_free`]) both when every check passes and when one fails,
 * in which case the status is [`DcStatus::VerificationFailed`].
 *
 * # Safety
 * `command` and `input` must be NUL-terminated strings, `args` must point
 * to `n_args` such strings (or be null when `n_args` is 0), and `report`
 * must be a valid pointer.
 */
enum DcStatus dc_run_command(const char *command,
                             const char *input,
                             const char *const *args,
                             size_t n_args,
                             char **report);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void dc_string_free(char *s);

/**
 * Message of the last failure on this thread; empty after a success. The
 * pointer stays valid until the next library call on the same thread.
 */
const char *dc_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DARBOUX_CONN_H */
