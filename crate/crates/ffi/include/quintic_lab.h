#ifndef QUINTIC_LAB_H
#define QUINTIC_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  QL_STATUS_OK = 0,
  QL_STATUS_INVALID_PARAMETER = 1,
  QL_STATUS_BUDGET_EXCEEDED = 2,
  QL_STATUS_INSTABILITY = 3,
  QL_STATUS_DEGENERATE = 4,
  QL_STATUS_GRID_MISMATCH = 5,
  QL_STATUS_UNKNOWN_ESTIMATE = 6,
  QL_STATUS_FORMAT = 7,
  QL_STATUS_IO = 8,
  QL_STATUS_NULL_POINTER = 9,
  QL_STATUS_PANIC = 10,
} QlStatus;

/**
 * Opaque handle to a Fourier field on the cube |n_i| ≤ N.
 */
typedef struct QlField QlField;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ql_version(void);

/**
 * Copy of the last error message on this thread, or NULL if none.
 */
char *ql_last_error(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void ql_string_free(char *s);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
QlStatus ql_field_zeros(size_t n_max, QlField **out);

/**
 * Randomized datum φ^ω with coefficients g_n ⟨n⟩^{−(5/2−α)}.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
QlStatus ql_field_randomized(uint64_t seed, double alpha, size_t n_max, QlField **out);

/**
 * # Safety
 * `f` must be NULL or a handle from this library, not used afterwards.
 */
void ql_field_free(QlField *f);

/**
 * # Safety
 * Pointers must be valid.
 */
QlStatus ql_field_n_max(const QlField *f, size_t *out);

/**
 * Number of coefficients, (2N+1)³.
 *
 * # Safety
 * Pointers must be valid.
 */
QlStatus ql_field_len(const QlField *f, size_t *out);

/**
 * Copy coefficients as interleaved (re, im) pairs in lexicographic order of
 * n (x slowest); `len` counts doubles and must equal 2·ql_field_len.
 *
 * # Safety
 * `data` must hold `len` doubles.
 */
QlStatus ql_field_get_coefficients(const QlField *f, double *data, size_t len);

/**
 * # Safety
 * `data` must hold `len` doubles; `f` must be a valid mutable handle.
 */
QlStatus ql_field_set_coefficients(QlField *f, const double *data, size_t len);

/**
 * ‖f‖_{Hˢ} = (Σ⟨n⟩^{2s}|a_n|²)^{1/2}.
 *
 * # Safety
 * Pointers must be valid.
 */
QlStatus ql_field_hs_norm(const QlField *f, double s, double *out);

/**
 * Fourier coefficients of |u|⁴u on the 5N cube; `bruteforce` selects the
 * direct convolution instead of the padded FFT.
 *
 * # Safety
 * Pointers must be valid.
 */
QlStatus ql_quintic(const QlField *f, bool bruteforce, QlField **out);

/**
 * Relative error of Σ J_k + resonant term against |u|⁴u.
 *
 * # Safety
 * Pointers must be valid.
 */
QlStatus ql_identity_error(const QlField *f, double *out);

/**
 * #{n ∈ ℤ³ : |n|² = r2}.
 *
 * # Safety
 * `out` must be valid.
 */
QlStatus ql_sphere_count(uint64_t r2, uint64_t *out);

/**
 * p-variation of a complex series given as `len` interleaved (re, im) pairs.
 *
 * # Safety
 * `series` must hold 2·len doubles.
 */
QlStatus ql_vp_norm(const double *series, size_t len, double p, double *out);

/**
 * Run an experiment config (the CLI's --config JSON). On success `out`
 * receives a JSON array of the written artifact paths.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be valid.
 */
QlStatus ql_run_config(const char *config_json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUINTIC_LAB_H */
