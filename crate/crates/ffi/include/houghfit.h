#ifndef HOUGHFIT_H
#define HOUGHFIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfMethod {
  HF_METHOD_HT = 0,
  HF_METHOD_STRIP = 1,
  HF_METHOD_LMS = 2,
  HF_METHOD_LS = 3,
} HfMethod;

/*
 Result code of every fallible call.
 */
typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_ARGUMENT = 2,
  HF_STATUS_NOT_IMPLEMENTED = 3,
  HF_STATUS_SINGULAR_DESIGN = 4,
  HF_STATUS_ASSUMPTION_VIOLATED = 5,
  HF_STATUS_NUMERIC = 6,
  HF_STATUS_IO = 7,
  HF_STATUS_PANIC = 8,
} HfStatus;

/*
 Opaque dataset handle.
 */
typedef struct HfDataset HfDataset;

/*
 Opaque fit handle.
 */
typedef struct HfFit HfFit;

/*
 Planar search lattice `[a_lo, a_hi] x [b_lo, b_hi]`.
 */
typedef struct HfGrid {
  double a_lo;
  double a_hi;
  double b_lo;
  double b_hi;
  size_t res_a;
  size_t res_b;
} HfGrid;

/*
 Finite-sample breakdown points as reduced fractions.
 */
typedef struct HfBreakdown {
  uint64_t add_num;
  uint64_t add_den;
  uint64_t rep_num;
  uint64_t rep_den;
  double add;
  double rep;
} HfBreakdown;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next call on this thread.
 */
const char *hf_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *hf_version(void);

/*
 Copies `n` observations. `*out` receives a handle to free with
 [`hf_dataset_free`].

 # Safety
 `xs` and `ys` must point to `n` readable doubles; `out` must be writable.
 */
enum HfStatus hf_dataset_new(const double *xs, const double *ys, size_t n, struct HfDataset **out);

/*
 # Safety
 `ds` must be null or a handle from [`hf_dataset_new`] not yet freed.
 */
void hf_dataset_free(struct HfDataset *ds);

/*
 # Safety
 `ds` must be a live dataset handle.
 */
size_t hf_dataset_len(const struct HfDataset *ds);

/*
 Fits `ds` on `grid`. `r` is ignored by LMS and LS; LS ignores the grid
 and yields a fit with no solution nodes.

 # Safety
 `ds` and `grid` must be valid pointers; `out` must be writable.
 */
enum HfStatus hf_fit(const struct HfDataset *ds,
                     enum HfMethod method,
                     const struct HfGrid *grid,
                     double r,
                     struct HfFit **out);

/*
 # Safety
 `fit` must be null or a handle from [`hf_fit`] not yet freed.
 */
void hf_fit_free(struct HfFit *fit);

/*
 # Safety
 `fit` must be a live fit handle; `a` and `b` must be writable.
 */
enum HfStatus hf_fit_theta(const struct HfFit *fit, double *a, double *b);

/*
 Maximal objective value (NaN for LS; the squared median residual for LMS).

 # Safety
 `fit` must be a live fit handle.
 */
double hf_fit_max_value(const struct HfFit *fit);

/*
 Number of lattice nodes attaining the optimum.

 # Safety
 `fit` must be a live fit handle.
 */
size_t hf_fit_solution_count(const struct HfFit *fit);

/*
 # Safety
 `fit` must be a live fit handle.
 */
size_t hf_fit_component_count(const struct HfFit *fit);

/*
 Nonzero when the solution set touches the grid boundary.

 # Safety
 `fit` must be a live fit handle.
 */
int32_t hf_fit_touches_boundary(const struct HfFit *fit);

/*
 Fraction of observations inside the template of `(a, b)` at radius `r`.

 # Safety
 `ds` must be a live dataset handle; `out` must be writable.
 */
enum HfStatus hf_objective_value(const struct HfDataset *ds,
                                 double a,
                                 double b,
                                 double r,
                                 double *out);

/*
 Exact breakdown points for `n` observations of which `inlier_count` lie
 in the optimal template.

 # Safety
 `out` must be writable.
 */
enum HfStatus hf_breakdown_points(uint64_t n, uint64_t inlier_count, struct HfBreakdown *out);

/*
 Large-sample limits `p / (1 + p)` and `p / 2`.

 # Safety
 `add` and `rep` must be writable.
 */
enum HfStatus hf_asymptotic_breakdown(double p, double *add, double *rep);

/*
 Probability that an observation from the model with Gaussian noise of
 standard deviation `sigma` and `X ~ U[x_lo, x_hi]` falls in the template
 of the true line at radius `r`.

 # Safety
 `out` must be writable.
 */
enum HfStatus hf_inlier_probability(double sigma, double x_lo, double x_hi, double r, double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HOUGHFIT_H */
