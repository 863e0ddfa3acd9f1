//! C ABI over the curve regression, the metrics and the model store.
//!
//! Every fallible function returns an [`LcStatus`]; on failure a description is kept in
//! thread-local storage and can be read with [`lc_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function. Panics never cross the
//! boundary: they are caught and reported as [`LcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use chrono::Datelike;
use loadcurve::cli::{ModelStore, StoreError};
use loadcurve::curves::{Curve, Grid};
use loadcurve::metrics;
use loadcurve::svdreg::{
    fit_curve_regression, predict_response_curve, CurveRegressionModel, CurveSample, DimMethod,
    DimSelectConfig,
};
use thiserror::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The estimator rejected the data (too few pairs, vanishing spectrum, ...).
    Numerical = 3,
    Io = 4,
    /// Bad header, unsupported version or checksum mismatch.
    CorruptStore = 5,
    Panic = 6,
}

/// Dimension selection rule for [`lc_curve_model_fit`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcDimMethod {
    Ratio = 0,
    Ic1 = 1,
    Ic2 = 2,
    IcMajority = 3,
    /// Use `fixed_r` components.
    Fixed = 4,
}

/// Fitted curve regression.
pub struct LcCurveModel {
    model: CurveRegressionModel,
    x_grid: Arc<Grid>,
}

/// Model store loaded from disk.
pub struct LcStore {
    store: ModelStore,
}

#[derive(Debug, Error)]
enum FfiError {
    #[error("null pointer passed for `{0}`")]
    Null(&'static str),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Numerical(#[from] loadcurve::svdreg::SvdRegError),
    #[error(transparent)]
    Metrics(#[from] metrics::MetricsError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl FfiError {
    fn status(&self) -> LcStatus {
        match self {
            FfiError::Null(_) => LcStatus::NullPointer,
            FfiError::Invalid(_) | FfiError::Metrics(_) => LcStatus::InvalidArgument,
            FfiError::Numerical(_) => LcStatus::Numerical,
            FfiError::Store(StoreError::Io(_)) => LcStatus::Io,
            FfiError::Store(_) => LcStatus::CorruptStore,
        }
    }
}

impl From<loadcurve::curves::CurveError> for FfiError {
    fn from(e: loadcurve::curves::CurveError) -> Self {
        FfiError::Invalid(e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> LcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LcStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            e.status()
        }
        Err(_) => {
            set_error("internal panic");
            LcStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], FfiError> {
    if ptr.is_null() {
        return Err(FfiError::Null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, name: &'static str) -> Result<&'a mut T, FfiError> {
    ptr.as_mut().ok_or(FfiError::Null(name))
}

/// Message for the last failed call on this thread, or NULL when it succeeded.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn lc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn lc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn grid(points: &[f64]) -> Result<Arc<Grid>, FfiError> {
    Ok(Arc::new(Grid::trapezoid(points.to_vec())?))
}

fn curves(grid: &Arc<Grid>, values: &[f64], n: usize) -> Result<Vec<Curve>, FfiError> {
    values
        .chunks(grid.len())
        .take(n)
        .map(|v| Curve::new(Arc::clone(grid), v.to_vec()).map_err(FfiError::from))
        .collect()
}

/// Fit a curve-on-curve regression on `n` pairs.
///
/// `x_values` holds `n * x_len` regressor values and `y_values` `n * y_len` response
/// values, one curve after another. Both grids use trapezoidal weights. `k` is the
/// number of regressor components per scalar regression; `fixed_r` is read only for
/// [`LcDimMethod::Fixed`].
///
/// # Safety
/// Every pointer must be valid for the stated number of elements; `out` must be
/// writable. On success `*out` owns a model to be released with [`lc_curve_model_free`].
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn lc_curve_model_fit(
    x_points: *const f64,
    x_len: usize,
    y_points: *const f64,
    y_len: usize,
    x_values: *const f64,
    y_values: *const f64,
    n: usize,
    method: LcDimMethod,
    fixed_r: usize,
    k: usize,
    out: *mut *mut LcCurveModel,
) -> LcStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        let xg = grid(slice(x_points, x_len, "x_points")?)?;
        let yg = grid(slice(y_points, y_len, "y_points")?)?;
        let xv = slice(x_values, n * x_len, "x_values")?;
        let yv = slice(y_values, n * y_len, "y_values")?;
        let sample = CurveSample::new(curves(&xg, xv, n)?, curves(&yg, yv, n)?)?;
        let method = match method {
            LcDimMethod::Ratio => DimMethod::Ratio,
            LcDimMethod::Ic1 => DimMethod::Ic1,
            LcDimMethod::Ic2 => DimMethod::Ic2,
            LcDimMethod::IcMajority => DimMethod::IcMajority,
            LcDimMethod::Fixed => DimMethod::Fixed(fixed_r),
        };
        let cfg = DimSelectConfig {
            method,
            ..DimSelectConfig::default()
        };
        let model = fit_curve_regression(&sample, &cfg, k)?;
        *out = Box::into_raw(Box::new(LcCurveModel { model, x_grid: xg }));
        Ok(())
    })
}

/// Predict the response curve for one regressor curve of `x_len` values into `y_out`
/// (`y_len` values).
///
/// # Safety
/// `model` must come from [`lc_curve_model_fit`]; the buffers must hold the stated
/// number of elements.
#[no_mangle]
pub unsafe extern "C" fn lc_curve_model_predict(
    model: *const LcCurveModel,
    x: *const f64,
    x_len: usize,
    y_out: *mut f64,
    y_len: usize,
) -> LcStatus {
    guard(|| {
        let m = model.as_ref().ok_or(FfiError::Null("model"))?;
        if x_len != m.x_grid.len() {
            return Err(FfiError::Invalid(format!(
                "regressor has {x_len} values, model grid has {}",
                m.x_grid.len()
            )));
        }
        let p = m.model.cross_cov.mean_y.len();
        if y_len != p {
            return Err(FfiError::Invalid(format!("output holds {y_len} values, response grid has {p}")));
        }
        if y_out.is_null() {
            return Err(FfiError::Null("y_out"));
        }
        let xc = Curve::new(Arc::clone(&m.x_grid), slice(x, x_len, "x")?.to_vec())?;
        let y = predict_response_curve(&m.model, &xc)?;
        std::slice::from_raw_parts_mut(y_out, y_len).copy_from_slice(y.values());
        Ok(())
    })
}

/// Selected correlation dimension.
///
/// # Safety
/// `model` must come from [`lc_curve_model_fit`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_curve_model_r_hat(model: *const LcCurveModel, out: *mut usize) -> LcStatus {
    guard(|| {
        let m = model.as_ref().ok_or(FfiError::Null("model"))?;
        *self::out(out, "out")? = m.model.r_hat;
        Ok(())
    })
}

/// Copy up to `cap` estimated eigenvalues (descending) into `buf`; `*written` receives
/// the number copied.
///
/// # Safety
/// `model` must come from [`lc_curve_model_fit`]; `buf` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn lc_curve_model_lambdas(
    model: *const LcCurveModel,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> LcStatus {
    guard(|| {
        let m = model.as_ref().ok_or(FfiError::Null("model"))?;
        let written = self::out(written, "written")?;
        if buf.is_null() && cap > 0 {
            return Err(FfiError::Null("buf"));
        }
        let l = &m.model.cross_cov.lambdas;
        let k = cap.min(l.len());
        if k > 0 {
            std::slice::from_raw_parts_mut(buf, k).copy_from_slice(&l[..k]);
        }
        *written = k;
        Ok(())
    })
}

/// Release a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`lc_curve_model_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lc_curve_model_free(model: *mut LcCurveModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Open and verify a model store written by `loadcurve fit`.
///
/// # Safety
/// `path` must be a nul-terminated UTF-8 string; `out` must be writable. On success
/// `*out` owns a store to be released with [`lc_store_free`].
#[no_mangle]
pub unsafe extern "C" fn lc_store_open(path: *const c_char, out: *mut *mut LcStore) -> LcStatus {
    guard(|| {
        let out = self::out(out, "out")?;
        if path.is_null() {
            return Err(FfiError::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| FfiError::Invalid("path is not UTF-8".into()))?;
        let store = ModelStore::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(LcStore { store }));
        Ok(())
    })
}

/// Number of class-pair models in the store.
///
/// # Safety
/// `store` must come from [`lc_store_open`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_store_model_count(store: *const LcStore, out: *mut usize) -> LcStatus {
    guard(|| {
        let s = store.as_ref().ok_or(FfiError::Null("store"))?;
        *self::out(out, "out")? = s.store.registry.models.len();
        Ok(())
    })
}

/// Date before which the store's curve models were trained, as `YYYYMMDD`.
///
/// # Safety
/// `store` must come from [`lc_store_open`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_store_cutoff(store: *const LcStore, out: *mut i32) -> LcStatus {
    guard(|| {
        let s = store.as_ref().ok_or(FfiError::Null("store"))?;
        let d = s.store.windows.curve_cutoff;
        *self::out(out, "out")? = d.year() * 10_000 + d.month() as i32 * 100 + d.day() as i32;
        Ok(())
    })
}

/// Release a store. NULL is ignored.
///
/// # Safety
/// `store` must come from [`lc_store_open`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lc_store_free(store: *mut LcStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Mean absolute percentage error of `n` values, as a fraction.
///
/// # Safety
/// `pred` and `truth` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_mape(pred: *const f64, truth: *const f64, n: usize, out: *mut f64) -> LcStatus {
    guard(|| {
        let v = metrics::mape(slice(pred, n, "pred")?, slice(truth, n, "truth")?)?;
        *self::out(out, "out")? = v;
        Ok(())
    })
}

/// Root mean squared error of `n` values.
///
/// # Safety
/// `pred` and `truth` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_rmse(pred: *const f64, truth: *const f64, n: usize, out: *mut f64) -> LcStatus {
    guard(|| {
        let v = metrics::rmse(slice(pred, n, "pred")?, slice(truth, n, "truth")?)?;
        *self::out(out, "out")? = v;
        Ok(())
    })
}
