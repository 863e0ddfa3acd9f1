mod common;

use std::path::Path;
use std::process::{Command, Output};

use chrono::{Duration, NaiveDate};
use loadcurve::cli::io::{read_holidays, read_load};
use loadcurve::cli::{cmd_evaluate, ModelStore, Overrides, RunConfig, StoreError};
use loadcurve::pipeline::engine::fit_history;
use loadcurve::pipeline::pairs::realized_pairs;

use common::run_config;

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadcurve"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = cli(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = cli(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn setup(years: u32, start: &str, end: &str, cadence: &str, horizon: usize) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let text = run_config(3, years, start, end, cadence, horizon);
    std::fs::write(dir.path().join("run.toml"), text).unwrap();
    dir
}

fn line_count(path: &Path) -> usize {
    std::fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn simulate_writes_every_half_hour_reproducibly() {
    let a = setup(2, "2002-06-03", "2002-06-30", "once", 1);
    let b = setup(2, "2002-06-03", "2002-06-30", "once", 1);
    ok(a.path(), &["simulate", "run.toml"]);
    ok(b.path(), &["simulate", "run.toml"]);
    let days = (NaiveDate::from_ymd_opt(2003, 1, 1).unwrap() - NaiveDate::from_ymd_opt(2001, 1, 1).unwrap())
        .num_days() as usize;
    assert_eq!(line_count(&a.path().join("data/load.csv")), days * 48 + 1);
    assert_eq!(line_count(&a.path().join("data/weather.csv")), days * 48 + 1);
    for f in ["data/load.csv", "data/weather.csv", "data/holidays.txt", "data/truth.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f} differs between runs"
        );
    }
}

#[test]
fn seed_override_changes_the_history() {
    let a = setup(1, "2001-06-04", "2001-06-10", "once", 1);
    ok(a.path(), &["simulate", "run.toml"]);
    let first = std::fs::read(a.path().join("data/load.csv")).unwrap();
    ok(a.path(), &["--seed", "99", "simulate", "run.toml"]);
    assert_ne!(first, std::fs::read(a.path().join("data/load.csv")).unwrap());
}

#[test]
fn missing_seed_is_named() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "[scenario]\nyears = 2\n").unwrap();
    let err = fails(dir.path(), &["simulate", "run.toml"]);
    assert!(err.contains("seed"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "[scenario]\nseed = 1\n\n[model]\nwindow = 3\n",
    )
    .unwrap();
    let err = fails(dir.path(), &["simulate", "run.toml"]);
    assert!(err.contains("window"), "{err}");
}

#[test]
fn bad_arguments_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["forecast"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(dir.path(), &["fit", "absent.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn model_count_matches_realized_class_pairs() {
    let dir = setup(13, "2009-01-05", "2009-01-11", "once", 1);
    ok(dir.path(), &["simulate", "run.toml"]);
    ok(dir.path(), &["fit", "run.toml"]);
    let cfg = RunConfig::load(&dir.path().join("run.toml"), &Overrides::default()).unwrap();
    let store = ModelStore::load(&cfg.paths.store).unwrap();
    let load = read_load(&cfg.paths.load).unwrap();
    let holidays = read_holidays(&cfg.paths.holidays).unwrap();
    let weather = loadcurve::cli::io::read_weather(&cfg.paths.weather).unwrap();
    let cutoff = store.windows.curve_cutoff;
    let pipeline = cfg.pipeline();
    let (ts, _) = fit_history(&load, &weather, &holidays, &pipeline, cutoff, 1).unwrap();
    let realized = realized_pairs(&ts.residuals, &holidays, cutoff);
    let eligible = realized.values().filter(|d| d.len() >= pipeline.n_min).count();
    let reg = &store.registry;
    assert_eq!(reg.models.len() + reg.absent.len(), realized.len());
    assert_eq!(reg.models.len(), eligible);
    for m in &reg.models {
        assert_eq!(m.n_train, realized[&(m.prev, m.target)].len());
        assert!(m.last_day < cutoff);
    }
}

#[test]
fn corrupted_store_is_refused() {
    let dir = setup(2, "2002-10-07", "2002-10-13", "once", 1);
    ok(dir.path(), &["simulate", "run.toml"]);
    ok(dir.path(), &["fit", "run.toml"]);
    let path = dir.path().join("model.store");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(ModelStore::from_text(&text).unwrap().to_text().unwrap(), text);

    let tampered = text.replacen("\"n_min\": 15", "\"n_min\": 16", 1);
    assert_ne!(tampered, text);
    assert!(matches!(ModelStore::from_text(&tampered), Err(StoreError::Checksum { .. })));
    std::fs::write(&path, &tampered).unwrap();
    let err = fails(dir.path(), &["forecast", "run.toml"]);
    assert!(err.contains("checksum"), "{err}");

    let future = text.replacen("loadcurve-store 1 ", "loadcurve-store 9 ", 1);
    assert!(matches!(ModelStore::from_text(&future), Err(StoreError::Version { .. })));
    std::fs::write(&path, future).unwrap();
    let err = fails(dir.path(), &["forecast", "run.toml"]);
    assert!(err.contains("version"), "{err}");
}

#[test]
fn day_ahead_hybrid_rows() {
    let dir = setup(2, "2002-06-03", "2002-06-12", "once", 1);
    let path = dir.path().join("run.toml");
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("kinds = [\"hybrid\", \"oracle\", \"baseline\"]", "kinds = [\"hybrid\"]");
    std::fs::write(&path, text).unwrap();
    ok(dir.path(), &["simulate", "run.toml"]);
    let holidays = read_holidays(&dir.path().join("data/holidays.txt")).unwrap();
    let start = NaiveDate::from_ymd_opt(2002, 6, 3).unwrap();
    let days = (0..10).filter(|k| !holidays.contains(start + Duration::days(*k))).count();
    assert_eq!(days, 10);
    ok(dir.path(), &["fit", "run.toml"]);
    let stdout = ok(dir.path(), &["forecast", "run.toml"]);
    assert!(stdout.contains("0 training-window violations"), "{stdout}");
    assert_eq!(line_count(&dir.path().join("out/forecast.csv")), 480 + 1);
    assert_eq!(line_count(&dir.path().join("out/audit.csv")), 1);
}

#[test]
fn weather_without_temperature_column_is_named() {
    let dir = setup(2, "2002-06-03", "2002-06-09", "once", 1);
    ok(dir.path(), &["simulate", "run.toml"]);
    let path = dir.path().join("data/weather.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("temp_c", "temperature", 1)).unwrap();
    let err = fails(dir.path(), &["fit", "run.toml"]);
    assert!(err.contains("temp_c"), "{err}");
}

#[test]
fn perfect_forecast_scores_zero() {
    let dir = setup(2, "2002-06-03", "2002-06-09", "once", 2);
    ok(dir.path(), &["simulate", "run.toml"]);
    ok(dir.path(), &["fit", "run.toml"]);
    ok(dir.path(), &["forecast", "run.toml"]);
    let load = std::fs::read_to_string(dir.path().join("data/load.csv")).unwrap();
    let actual: std::collections::HashMap<(String, String), String> = load
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            ((f[0].to_string(), f[1].to_string()), f[2].to_string())
        })
        .collect();
    let fc = std::fs::read_to_string(dir.path().join("out/forecast.csv")).unwrap();
    let mut lines = fc.lines();
    let mut perfect = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let mut f: Vec<String> = l.split(',').map(str::to_string).collect();
        f[2] = actual[&(f[0].clone(), f[1].clone())].clone();
        perfect += &(f.join(",") + "\n");
    }
    let fpath = dir.path().join("perfect.csv");
    std::fs::write(&fpath, perfect).unwrap();
    let out = cmd_evaluate(&fpath, &dir.path().join("data/load.csv"), &dir.path().join("eval")).unwrap();
    assert!(!out.reports.is_empty());
    for r in out.reports.values() {
        assert_eq!(r.overall.mape, 0.0);
        assert_eq!(r.overall.rmse, 0.0);
        assert!(r.per_day.iter().all(|d| d.mape == 0.0 && d.rmse == 0.0));
    }
    assert!(dir.path().join("eval/report.txt").exists());
}
