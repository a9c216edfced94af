#ifndef SHAPEINV_H
#define SHAPEINV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SiStatus {
  SI_STATUS_OK = 0,
  SI_STATUS_NULL_POINTER = 1,
  SI_STATUS_INVALID_ARGUMENT = 2,
  SI_STATUS_DIMENSION_MISMATCH = 3,
  SI_STATUS_INFEASIBLE = 4,
  SI_STATUS_OVERLAPPING_INTERVALS = 5,
  SI_STATUS_PARSE = 6,
  SI_STATUS_IO = 7,
  SI_STATUS_EMPTY_RESULTS = 8,
  SI_STATUS_PANIC = 9,
} SiStatus;

/**
 * Band-limited curve.
 */
typedef struct SiCurve SiCurve;

/**
 * Observed Fourier coefficients.
 */
typedef struct SiDataset SiDataset;

/**
 * Shift law on the circle.
 */
typedef struct SiMeasure SiMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len - 1` bytes) and returns the full message
 * length in bytes. Passing a null `buf` only queries the length.
 */
size_t si_last_error_message(char *buf, size_t len);

/**
 * Creates a curve from `len = 2L + 1` coefficients.
 */
enum SiStatus si_curve_new(const double *re, const double *im, size_t len, struct SiCurve **curve);

void si_curve_free(struct SiCurve *curve);

/**
 * Cutoff `L` of the curve, or 0 for a null handle.
 */
size_t si_curve_cutoff(const struct SiCurve *curve);

/**
 * Copies the `2L + 1` coefficients out.
 */
enum SiStatus si_curve_coeffs(const struct SiCurve *curve, double *re, double *im, size_t len);

/**
 * `kind = 0` for the L2 norm, `1` for the H1 seminorm, otherwise the
 * Sobolev norm of order `s`.
 */
enum SiStatus si_curve_norm(const struct SiCurve *curve, uint32_t kind, double s, double *value);

/**
 * New curve with coefficients `theta_k exp(-i 2 pi k phi)`.
 */
enum SiStatus si_curve_shifted(const struct SiCurve *curve, double phi, struct SiCurve **shifted);

/**
 * Atomic measure from `n` locations and nonnegative weights.
 */
enum SiStatus si_measure_new_discrete(const double *locations,
                                      const double *weights,
                                      size_t n,
                                      struct SiMeasure **measure);

/**
 * Piecewise-constant density with `bins` equal bins carrying `masses`.
 */
enum SiStatus si_measure_new_grid(const double *masses, size_t bins, struct SiMeasure **measure);

void si_measure_free(struct SiMeasure *measure);

/**
 * Trigonometric moment `int exp(i 2 pi r x) g(dx)`.
 */
enum SiStatus si_measure_moment(const struct SiMeasure *measure, int64_t r, double *re, double *im);

/**
 * Simulates `n` observations of the truth `(f0, g0)` up to frequency `l_obs`.
 */
enum SiStatus si_simulate(const struct SiCurve *f0,
                          const struct SiMeasure *g0,
                          size_t n,
                          size_t l_obs,
                          uint64_t seed,
                          struct SiDataset **dataset);

void si_dataset_free(struct SiDataset *dataset);

/**
 * Number of observations, or 0 for a null handle.
 */
size_t si_dataset_len(const struct SiDataset *dataset);

/**
 * Observation cutoff, or 0 for a null handle.
 */
size_t si_dataset_cutoff(const struct SiDataset *dataset);

/**
 * Copies observation `j` out; `len` must be `2L + 1`.
 */
enum SiStatus si_dataset_row(const struct SiDataset *dataset,
                             size_t j,
                             double *re,
                             double *im,
                             size_t len);

enum SiStatus si_dataset_write(const struct SiDataset *dataset, const char *file);

enum SiStatus si_dataset_read(const char *file, struct SiDataset **dataset);

/**
 * Total variation between `N_C(z1, I)` and `N_C(z2, I)`.
 */
enum SiStatus si_gauss_tv(const double *re1,
                          const double *im1,
                          const double *re2,
                          const double *im2,
                          size_t len,
                          double *value);

/**
 * Hellinger distance between `N_C(z1, I)` and `N_C(z2, I)`.
 */
enum SiStatus si_gauss_hellinger(const double *re1,
                                 const double *im1,
                                 const double *re2,
                                 const double *im2,
                                 size_t len,
                                 double *value);

/**
 * Runs the posterior sampler with the default prior on `dataset` and
 * reports the `q`-quantile of the Hellinger distances from the retained
 * draws to `P_{f0, g0}` (`n_mc` Monte-Carlo samples per distance).
 */
enum SiStatus si_posterior_radius(const struct SiDataset *dataset,
                                  const struct SiCurve *f0,
                                  const struct SiMeasure *g0,
                                  size_t iterations,
                                  size_t burn_in,
                                  size_t thin,
                                  uint64_t seed,
                                  double q,
                                  size_t n_mc,
                                  double *radius);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPEINV_H */
