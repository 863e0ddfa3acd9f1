use std::ffi::{CStr, CString};
use std::ptr;

use loadcurve::cli::ModelStore;
use loadcurve_ffi::*;

fn last_error() -> String {
    let p = lc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

/// Noiseless pairs `Y = A X` on 4-point grids.
fn pairs(n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let pts = vec![0.0, 1.0, 2.0, 3.0];
    let a = [
        [0.5, -0.2, 0.1, 0.0],
        [0.1, 0.4, 0.0, -0.3],
        [0.0, 0.2, 0.7, 0.1],
        [-0.1, 0.0, 0.3, 0.6],
    ];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        let x: Vec<f64> = (0..4)
            .map(|j| ((i * 7 + j * 3) as f64 * 0.37).sin() + 0.1 * (i as f64 * (j + 1) as f64).cos())
            .collect();
        for row in &a {
            ys.push(row.iter().zip(&x).map(|(r, v)| r * v).sum::<f64>());
        }
        xs.extend(x);
    }
    (pts, xs, ys)
}

#[test]
fn fit_predict_and_inspect() {
    let (pts, xs, ys) = pairs(40);
    let mut model: *mut LcCurveModel = ptr::null_mut();
    let st = unsafe {
        lc_curve_model_fit(
            pts.as_ptr(),
            4,
            pts.as_ptr(),
            4,
            xs.as_ptr(),
            ys.as_ptr(),
            40,
            LcDimMethod::Fixed,
            4,
            4,
            &mut model,
        )
    };
    assert_eq!(st, LcStatus::Ok);
    assert!(lc_last_error_message().is_null());

    let mut r = 0usize;
    assert_eq!(unsafe { lc_curve_model_r_hat(model, &mut r) }, LcStatus::Ok);
    assert_eq!(r, 4);

    // in-sample prediction of a noiseless full-rank fit is exact
    let mut y = [0.0; 4];
    assert_eq!(
        unsafe { lc_curve_model_predict(model, xs[8..12].as_ptr(), 4, y.as_mut_ptr(), 4) },
        LcStatus::Ok
    );
    for (p, t) in y.iter().zip(&ys[8..12]) {
        assert!((p - t).abs() < 1e-8, "{p} vs {t}");
    }

    let mut lambdas = [0.0; 8];
    let mut written = 0usize;
    assert_eq!(
        unsafe { lc_curve_model_lambdas(model, lambdas.as_mut_ptr(), 8, &mut written) },
        LcStatus::Ok
    );
    assert_eq!(written, 4);
    assert!(lambdas[..4].windows(2).all(|w| w[0] >= w[1]));

    assert_eq!(
        unsafe { lc_curve_model_predict(model, xs.as_ptr(), 3, y.as_mut_ptr(), 4) },
        LcStatus::InvalidArgument
    );
    assert!(last_error().contains("3 values"));
    unsafe { lc_curve_model_free(model) };
}

#[test]
fn estimator_errors_are_reported() {
    let (pts, xs, ys) = pairs(2);
    let mut model: *mut LcCurveModel = ptr::null_mut();
    let st = unsafe {
        lc_curve_model_fit(
            pts.as_ptr(),
            4,
            pts.as_ptr(),
            4,
            xs.as_ptr(),
            ys.as_ptr(),
            2,
            LcDimMethod::Ratio,
            0,
            3,
            &mut model,
        )
    };
    assert_eq!(st, LcStatus::Numerical);
    assert!(model.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_pointers_rejected() {
    let mut out = 0.0;
    assert_eq!(unsafe { lc_mape(ptr::null(), [1.0].as_ptr(), 1, &mut out) }, LcStatus::NullPointer);
    assert!(last_error().contains("pred"));
    assert_eq!(
        unsafe { lc_rmse([1.0].as_ptr(), [1.0].as_ptr(), 1, ptr::null_mut()) },
        LcStatus::NullPointer
    );
    let mut r = 0usize;
    assert_eq!(unsafe { lc_curve_model_r_hat(ptr::null(), &mut r) }, LcStatus::NullPointer);
    unsafe {
        lc_curve_model_free(ptr::null_mut());
        lc_store_free(ptr::null_mut());
    }
}

#[test]
fn metrics_match_library() {
    let mut m = 0.0;
    let mut r = 0.0;
    unsafe {
        assert_eq!(lc_mape([110.0, 95.0].as_ptr(), [100.0, 100.0].as_ptr(), 2, &mut m), LcStatus::Ok);
        assert_eq!(lc_rmse([103.0, 99.0].as_ptr(), [100.0, 100.0].as_ptr(), 2, &mut r), LcStatus::Ok);
    }
    assert!((m - 0.075).abs() < 1e-12);
    assert!((r - 5f64.sqrt()).abs() < 1e-12);
    assert_eq!(
        unsafe { lc_mape([1.0].as_ptr(), [0.0].as_ptr(), 1, &mut m) },
        LcStatus::InvalidArgument
    );
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(lc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn fitted_store(dir: &std::path::Path) -> std::path::PathBuf {
    use loadcurve::cli::{cmd_fit, cmd_simulate, Overrides, RunConfig};
    let cfg_path = dir.join("run.toml");
    std::fs::write(
        &cfg_path,
        "[scenario]\nseed = 3\nyears = 2\n[model]\ncadence = \"once\"\n[evaluation]\nstart = \"2002-10-07\"\nend = \"2002-10-20\"\n",
    )
    .unwrap();
    let cfg = RunConfig::load(&cfg_path, &Overrides::default()).unwrap();
    cmd_simulate(&cfg).unwrap();
    cmd_fit(&cfg).unwrap();
    cfg.paths.store
}

#[test]
fn store_open_and_reject_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let path = fitted_store(dir.path());
    let expected = ModelStore::load(&path).unwrap().registry.models.len();

    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut store: *mut LcStore = ptr::null_mut();
    assert_eq!(unsafe { lc_store_open(c.as_ptr(), &mut store) }, LcStatus::Ok);
    let mut count = 0usize;
    let mut cutoff = 0i32;
    unsafe {
        assert_eq!(lc_store_model_count(store, &mut count), LcStatus::Ok);
        assert_eq!(lc_store_cutoff(store, &mut cutoff), LcStatus::Ok);
        lc_store_free(store);
    }
    assert_eq!(count, expected);
    assert_eq!(cutoff, 20021007);

    let text = std::fs::read_to_string(&path).unwrap();
    let bad = dir.path().join("bad.store");
    std::fs::write(&bad, text.replacen("\"n_train\"", "\"n_trian\"", 1)).unwrap();
    let c = CString::new(bad.to_str().unwrap()).unwrap();
    let mut store: *mut LcStore = ptr::null_mut();
    assert_eq!(unsafe { lc_store_open(c.as_ptr(), &mut store) }, LcStatus::CorruptStore);
    assert!(store.is_null());
    assert!(last_error().contains("checksum"));

    let missing = CString::new(dir.path().join("nope.store").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { lc_store_open(missing.as_ptr(), &mut store) }, LcStatus::Io);
}
