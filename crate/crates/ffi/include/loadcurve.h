#ifndef LOADCURVE_H
#define LOADCURVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum LcStatus {
  LC_STATUS_OK = 0,
  LC_STATUS_NULL_POINTER = 1,
  LC_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The estimator rejected the data (too few pairs, vanishing spectrum, ...).
   */
  LC_STATUS_NUMERICAL = 3,
  LC_STATUS_IO = 4,
  /**
   * Bad header, unsupported version or checksum mismatch.
   */
  LC_STATUS_CORRUPT_STORE = 5,
  LC_STATUS_PANIC = 6,
} LcStatus;

/**
 * Dimension selection rule for [`lc_curve_model_fit`].
 */
typedef enum LcDimMethod {
  LC_DIM_METHOD_RATIO = 0,
  LC_DIM_METHOD_IC1 = 1,
  LC_DIM_METHOD_IC2 = 2,
  LC_DIM_METHOD_IC_MAJORITY = 3,
  /**
   * Use `fixed_r` components.
   */
  LC_DIM_METHOD_FIXED = 4,
} LcDimMethod;

/**
 * Fitted curve regression.
 */
typedef struct LcCurveModel LcCurveModel;

/**
 * Model store loaded from disk.
 */
typedef struct LcStore LcStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL when it succeeded.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *lc_last_error_message(void);

/**
 * Library version as a static nul-terminated string.
 */
const char *lc_version(void);

/**
 * Fit a curve-on-curve regression on `n` pairs.
 *
 * `x_values` holds `n * x_len` regressor values and `y_values` `n * y_len` response
 * values, one curve after another. Both grids use trapezoidal weights. `k` is the
 * number of regressor components per scalar regression; `fixed_r` is read only for
 * [`LcDimMethod::Fixed`].
 *
 * # Safety
 * Every pointer must be valid for the stated number of elements; `out` must be
 * writable. On success `*out` owns a model to be released with [`lc_curve_model_free`].
 */
enum LcStatus lc_curve_model_fit(const double *x_points,
                                 size_t x_len,
                                 const double *y_points,
                                 size_t y_len,
                                 const double *x_values,
                                 const double *y_values,
                                 size_t n,
                                 enum LcDimMethod method,
                                 size_t fixed_r,
                                 size_t k,
                                 struct LcCurveModel **out);

/**
 * Predict the response curve for one regressor curve of `x_len` values into `y_out`
 * (`y_len` values).
 *
 * # Safety
 * `model` must come from [`lc_curve_model_fit`]; the buffers must hold the stated
 * number of elements.
 */
enum LcStatus lc_curve_model_predict(const struct LcCurveModel *model,
                                     const double *x,
                                     size_t x_len,
                                     double *y_out,
                                     size_t y_len);

/**
 * Selected correlation dimension.
 *
 * # Safety
 * `model` must come from [`lc_curve_model_fit`]; `out` must be writable.
 */
enum LcStatus lc_curve_model_r_hat(const struct LcCurveModel *model, size_t *out);

/**
 * Copy up to `cap` estimated eigenvalues (descending) into `buf`; `*written` receives
 * the number copied.
 *
 * # Safety
 * `model` must come from [`lc_curve_model_fit`]; `buf` must hold `cap` values.
 */
enum LcStatus lc_curve_model_lambdas(const struct LcCurveModel *model,
                                     double *buf,
                                     size_t cap,
                                     size_t *written);

/**
 * Release a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from [`lc_curve_model_fit`] and not be used afterwards.
 */
void lc_curve_model_free(struct LcCurveModel *model);

/**
 * Open and verify a model store written by `loadcurve fit`.
 *
 * # Safety
 * `path` must be a nul-terminated UTF-8 string; `out` must be writable. On success
 * `*out` owns a store to be released with [`lc_store_free`].
 */
enum LcStatus lc_store_open(const char *path, struct LcStore **out);

/**
 * Number of class-pair models in the store.
 *
 * # Safety
 * `store` must come from [`lc_store_open`]; `out` must be writable.
 */
enum LcStatus lc_store_model_count(const struct LcStore *store, size_t *out);

/**
 * Date before which the store's curve models were trained, as `YYYYMMDD`.
 *
 * # Safety
 * `store` must come from [`lc_store_open`]; `out` must be writable.
 */
enum LcStatus lc_store_cutoff(const struct LcStore *store, int32_t *out);

/**
 * Release a store. NULL is ignored.
 *
 * # Safety
 * `store` must come from [`lc_store_open`] and not be used afterwards.
 */
void lc_store_free(struct LcStore *store);

/**
 * Mean absolute percentage error of `n` values, as a fraction.
 *
 * # Safety
 * `pred` and `truth` must hold `n` values; `out` must be writable.
 */
enum LcStatus lc_mape(const double *pred, const double *truth, size_t n, double *out);

/**
 * Root mean squared error of `n` values.
 *
 * # Safety
 * `pred` and `truth` must hold `n` values; `out` must be writable.
 */
enum LcStatus lc_rmse(const double *pred, const double *truth, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOADCURVE_H */
