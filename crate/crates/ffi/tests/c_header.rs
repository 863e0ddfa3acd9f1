use std::path::Path;
use std::process::Command;

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("loadcurve.h").exists());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        r#"#include "loadcurve.h"
int main(void) {
    double m = 0.0;
    const double p[2] = {110.0, 95.0}, t[2] = {100.0, 100.0};
    LcStatus s = lc_mape(p, t, 2, &m);
    LcCurveModel *model = 0;
    lc_curve_model_free(model);
    return s == LC_STATUS_OK ? 0 : 1;
}
"#,
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("no C compiler `{cc}` available ({e}); header not checked");
            return;
        }
    };
    assert!(status.success());
}
