#ifndef CAR_LAB_H
#define CAR_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum CarLabStatus {
  CAR_LAB_STATUS_OK = 0,
  CAR_LAB_STATUS_NULL_POINTER = 1,
  CAR_LAB_STATUS_INVALID_UTF8 = 2,
  CAR_LAB_STATUS_PARSE = 3,
  CAR_LAB_STATUS_INVALID_ARGUMENT = 4,
  CAR_LAB_STATUS_INSUFFICIENT_WINDOW = 5,
  CAR_LAB_STATUS_NOT_UNIMODULAR = 6,
  CAR_LAB_STATUS_INDETERMINATE_RANK = 7,
  CAR_LAB_STATUS_NOT_STABILIZED = 8,
  CAR_LAB_STATUS_UNKNOWN_SUITE = 9,
  CAR_LAB_STATUS_NUMERICAL = 10,
  CAR_LAB_STATUS_PANIC = 11,
} CarLabStatus;

/**
 * A loop `ζ^w e^{ih}` on the circle.
 */
typedef struct CarLabLoop CarLabLoop;

/**
 * Records of a finished verification suite.
 */
typedef struct CarLabSuiteRun CarLabSuiteRun;

typedef struct CarLabIndexReport {
  size_t kernel_dim;
  size_t cokernel_dim;
  /**
   * `dim coker − dim ker` of the compression to the nonnegative modes.
   */
  int64_t q;
  /**
   * Same value at all three windows tried.
   */
  bool stable;
  /**
   * Smallest window used.
   */
  size_t window;
} CarLabIndexReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Owned by the
 * library and valid until the next call.
 */
const char *car_lab_last_error(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void car_lab_string_free(char *s);

/**
 * Parses `{"winding": w, "h": [[k, re, im], ...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum CarLabStatus car_lab_loop_from_json(const char *json, struct CarLabLoop **out);

/**
 * `ζ ↦ ζ^winding`.
 */
struct CarLabLoop *car_lab_loop_monomial(int64_t winding);

/**
 * # Safety
 * `f` must come from this library and not be freed twice.
 */
void car_lab_loop_free(struct CarLabLoop *f);

/**
 * Winding number by argument lifting.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum CarLabStatus car_lab_loop_winding(const struct CarLabLoop *f, int64_t *out);

/**
 * Charge index of the multiplication operator of `f`. `window = 0` picks
 * a default from the bandwidth.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum CarLabStatus car_lab_charge_index(const struct CarLabLoop *f,
                                       size_t window,
                                       struct CarLabIndexReport *out);

/**
 * `s(A, B)` for real zero-mean trigonometric polynomials given as
 * `{"coeffs": [[k, re, im], ...]}`.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated strings and `out` writable.
 */
enum CarLabStatus car_lab_schwinger_form(const char *a, const char *b, double *out);

/**
 * Runs `index`, `schwinger`, `weyl`, `grading`, `stabilizer` or `all`.
 * `config_json` may be null for defaults.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `config_json` null or one, and
 * `out` writable.
 */
enum CarLabStatus car_lab_run_suite(const char *name,
                                    const char *config_json,
                                    struct CarLabSuiteRun **out);

/**
 * # Safety
 * `run` must be a live handle.
 */
size_t car_lab_suite_len(const struct CarLabSuiteRun *run);

/**
 * # Safety
 * `run` must be a live handle.
 */
bool car_lab_suite_all_pass(const struct CarLabSuiteRun *run);

/**
 * JSON-lines rendering; free with `car_lab_string_free`.
 *
 * # Safety
 * `run` must be a live handle.
 */
char *car_lab_suite_json_lines(const struct CarLabSuiteRun *run);

/**
 * # Safety
 * `run` must come from this library and not be freed twice.
 */
void car_lab_suite_free(struct CarLabSuiteRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAR_LAB_H */
