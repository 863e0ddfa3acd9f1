//! The four subcommands as library functions returning what they wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use chrono::{Duration, NaiveDate};

use super::config::RunConfig;
use super::io;
use super::store::{ModelStore, TrainingWindows, FORMAT_VERSION};
use crate::datagen::generate;
use crate::metrics::{evaluate_by_kind, EvalReport, GroupRow};
use crate::pipeline::engine::fit_history;
use crate::pipeline::{
    audit_windows, day_type, AuditViolation, Cadence, ForecastKind, ForecastResult, Forecaster,
    HalfHourlySeries, HolidaySet, WeatherSeries, DAY_TYPE_LABELS, SLOTS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateOutput {
    pub load: PathBuf,
    pub weather: PathBuf,
    pub holidays: PathBuf,
    pub truth: PathBuf,
    pub rows: usize,
}

/// Generate the `[scenario]` history and write it where `[paths]` points.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateOutput> {
    let scenario = cfg.scenario()?;
    let s = generate(scenario).map_err(anyhow::Error::msg).context("scenario generation")?;
    let p = &cfg.paths;
    io::write_load(&p.load, &s.load)?;
    io::write_weather(&p.weather, &s.weather)?;
    io::write_holidays(&p.holidays, &s.holidays)?;
    let truth = serde_json::to_string_pretty(&s.truth)?;
    io::write_text(&p.truth, &(truth + "\n"))?;
    Ok(SimulateOutput {
        load: p.load.clone(),
        weather: p.weather.clone(),
        holidays: p.holidays.clone(),
        truth: p.truth.clone(),
        rows: s.load.values().len(),
    })
}

/// Load, weather and holidays named by `[paths]`, checked for alignment.
pub fn read_inputs(cfg: &RunConfig) -> Result<(HalfHourlySeries, WeatherSeries, HolidaySet)> {
    let p = &cfg.paths;
    let load = io::read_load(&p.load)?;
    let weather = io::read_weather(&p.weather)?;
    let holidays = io::read_holidays(&p.holidays)?;
    ensure!(
        weather.start() <= load.start() && weather.end() >= load.end(),
        "weather covers {}..{} but load covers {}..{}",
        weather.start(),
        weather.end(),
        load.start(),
        load.end()
    );
    Ok((load, weather, holidays))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub store: PathBuf,
    pub cutoff: NaiveDate,
    pub models: usize,
    pub absent: usize,
    pub gam_weeks: usize,
}

/// Fit the trend model and every class-pair model on data before `evaluation.start`
/// (or on the whole history when unset) and save the store.
pub fn cmd_fit(cfg: &RunConfig) -> Result<FitOutput> {
    let (load, weather, holidays) = read_inputs(cfg)?;
    let pipeline = cfg.pipeline();
    let cutoff = cfg
        .evaluation
        .start
        .unwrap_or(load.end() + Duration::days(1));
    ensure!(
        cutoff > load.start(),
        "evaluation.start {cutoff} leaves no history before it (load starts {})",
        load.start()
    );
    let (ts, registry) = fit_history(
        &load,
        &weather,
        &holidays,
        &pipeline,
        cutoff,
        cfg.model.workers,
    )
    .with_context(|| format!("fitting on history before {cutoff}"))?;
    let out = FitOutput {
        store: cfg.paths.store.clone(),
        cutoff,
        models: registry.models.len(),
        absent: registry.absent.len(),
        gam_weeks: ts.gam.n,
    };
    let store = ModelStore {
        format_version: FORMAT_VERSION,
        pipeline,
        origin: crate::pipeline::series::first_monday(load.start()),
        windows: TrainingWindows {
            gam_first_week: ts.first_week,
            gam_last_day: ts.train_end(),
            curve_cutoff: cutoff,
        },
        gam: ts.gam,
        registry,
    };
    store.save(&cfg.paths.store)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastOutput {
    pub forecast: PathBuf,
    pub audit: PathBuf,
    pub results: Vec<ForecastResult>,
    pub violations: Vec<AuditViolation>,
}

/// Forecast every non-holiday issue date in `[from, to]` with chains of `horizon` days.
///
/// With cadence `once` every forecast is served from the saved store. With `daily` or
/// `weekly` the models are refitted while rolling, using the store's configuration.
pub fn cmd_forecast(
    cfg: &RunConfig,
    from: NaiveDate,
    to: NaiveDate,
    horizon: usize,
) -> Result<ForecastOutput> {
    ensure!(from <= to, "forecast range {from}..{to} is empty");
    let store = ModelStore::load(&cfg.paths.store)
        .with_context(|| format!("loading {}", cfg.paths.store.display()))?;
    let (load, weather, holidays) = read_inputs(cfg)?;
    let mut pipeline = store.pipeline.clone();
    pipeline.cadence = cfg.model.cadence;
    let wanted = cfg.pipeline();
    if pipeline.regressor.variant != wanted.regressor.variant || pipeline.preset != wanted.preset {
        bail!(
            "store was fitted with {} / {}, config asks for {} / {}; run `fit` again",
            pipeline.regressor.variant,
            pipeline.preset,
            wanted.regressor.variant,
            wanted.preset
        );
    }
    let mut forecaster = Forecaster::new(&load, &weather, &holidays, pipeline)?;
    if cfg.model.cadence == Cadence::Once {
        ensure!(
            forecaster.origin() == store.origin,
            "load history starts in the week of {}, the store was fitted from {}",
            forecaster.origin(),
            store.origin
        );
        ensure!(
            from >= store.windows.curve_cutoff,
            "first issue date {from} is inside the store's training window (ends before {})",
            store.windows.curve_cutoff
        );
        forecaster = forecaster.with_models(store.gam, store.registry)?;
    }
    let results = forecaster.forecast_range(from, to, horizon, &cfg.evaluation.kinds)?;
    let violations = audit_windows(&results);
    let forecast = cfg.paths.forecast_csv();
    let audit = cfg.paths.audit_csv();
    io::write_forecasts(&forecast, &results)?;
    io::write_csv(
        &audit,
        &["date", "kind", "step", "issued", "window", "train_end"],
        violations.iter().map(|v| {
            [
                v.date.to_string(),
                v.kind.as_str().to_string(),
                v.step.to_string(),
                v.issued.to_string(),
                v.window.to_string(),
                v.train_end.to_string(),
            ]
        }),
    )?;
    Ok(ForecastOutput {
        forecast,
        audit,
        results,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutput {
    pub reports: BTreeMap<(ForecastKind, usize), EvalReport>,
    pub table: String,
    pub files: Vec<PathBuf>,
}

fn f(x: f64) -> String {
    x.to_string()
}

fn group_rows<'a>(
    reports: &'a BTreeMap<(ForecastKind, usize), EvalReport>,
    pick: impl Fn(&'a EvalReport) -> &'a [GroupRow] + 'a,
) -> impl Iterator<Item = [String; 6]> + 'a {
    reports.iter().flat_map(move |((kind, step), rep)| {
        pick(rep).iter().filter(|g| g.days > 0).map(move |g| {
            [
                kind.as_str().to_string(),
                step.to_string(),
                g.label.clone(),
                g.days.to_string(),
                f(g.mape),
                f(g.rmse),
            ]
        })
    })
}

/// Aligned text table: one block per step, MAPE and RMSE columns for each kind present.
pub fn report_table(reports: &BTreeMap<(ForecastKind, usize), EvalReport>) -> String {
    let mut out = String::from(
        "Group MAPE/RMSE are unweighted means of per-day values over the 48 half-hours.\n\
         The pooled row averages every half-hour instead.\n",
    );
    let steps: std::collections::BTreeSet<usize> = reports.keys().map(|k| k.1).collect();
    for step in steps {
        let cols: Vec<(&ForecastKind, &EvalReport)> = reports
            .iter()
            .filter(|(k, _)| k.1 == step)
            .map(|(k, r)| (&k.0, r))
            .collect();
        let mut header = vec!["group".to_string(), "days".to_string()];
        for (k, _) in &cols {
            header.push(format!("{} MAPE%", k.as_str()));
            header.push(format!("{} RMSE", k.as_str()));
        }
        let first = cols[0].1;
        let row = |label: &str, days: usize, cells: Vec<(f64, f64)>| {
            let mut r = vec![label.to_string(), days.to_string()];
            for (m, e) in cells {
                r.push(format!("{:.3}", 100.0 * m));
                r.push(format!("{e:.1}"));
            }
            r
        };
        let mut rows = vec![
            row(
                "overall",
                first.overall.days,
                cols.iter().map(|(_, r)| (r.overall.mape, r.overall.rmse)).collect(),
            ),
            row(
                "pooled",
                first.overall.days,
                cols.iter().map(|(_, r)| (r.pooled_mape, r.pooled_rmse)).collect(),
            ),
        ];
        let groups = |pick: fn(&EvalReport) -> &[GroupRow], prefix: &str, rows: &mut Vec<Vec<String>>| {
            for (i, g) in pick(first).iter().enumerate() {
                if g.days == 0 {
                    continue;
                }
                let cells = cols
                    .iter()
                    .map(|(_, r)| (pick(r)[i].mape, pick(r)[i].rmse))
                    .collect();
                rows.push(row(&format!("{prefix}{}", g.label), g.days, cells));
            }
        };
        groups(|r| &r.by_month, "month ", &mut rows);
        groups(|r| &r.by_day_type, "", &mut rows);
        out.push_str(&format!("\nstep {step}\n"));
        out.push_str(&io::text_table(&header, &rows));
    }
    out
}

/// Score a forecast CSV against a load CSV and write the report files into `out_dir`.
pub fn cmd_evaluate(forecast_csv: &Path, actual_csv: &Path, out_dir: &Path) -> Result<EvaluateOutput> {
    let forecasts = io::read_forecasts(forecast_csv)?;
    ensure!(!forecasts.is_empty(), "{} holds no forecasts", forecast_csv.display());
    let actuals = io::read_actuals(actual_csv)?;
    let reports = evaluate_by_kind(&forecasts, &actuals)?;
    let files: Vec<PathBuf> = ["overall.csv", "by_month.csv", "by_day_type.csv", "per_day.csv", "report.txt"]
        .iter()
        .map(|n| out_dir.join(n))
        .collect();
    io::write_csv(
        &files[0],
        &["kind", "step", "days", "mape", "rmse", "pooled_mape", "pooled_rmse"],
        reports.iter().map(|((k, s), r)| {
            [
                k.as_str().to_string(),
                s.to_string(),
                r.overall.days.to_string(),
                f(r.overall.mape),
                f(r.overall.rmse),
                f(r.pooled_mape),
                f(r.pooled_rmse),
            ]
        }),
    )?;
    let head = |g: &'static str| ["kind", "step", g, "days", "mape", "rmse"];
    io::write_csv(&files[1], &head("month"), group_rows(&reports, |r| &r.by_month))?;
    io::write_csv(&files[2], &head("day_type"), group_rows(&reports, |r| &r.by_day_type))?;
    io::write_csv(
        &files[3],
        &["date", "kind", "step", "day_type", "mape", "rmse"],
        reports.values().flat_map(|r| {
            r.per_day.iter().map(|d| {
                [
                    d.date.to_string(),
                    d.kind.as_str().to_string(),
                    d.step.to_string(),
                    DAY_TYPE_LABELS[day_type(d.date) as usize].to_string(),
                    f(d.mape),
                    f(d.rmse),
                ]
            })
        }),
    )?;
    let table = report_table(&reports);
    io::write_text(&files[4], &table)?;
    Ok(EvaluateOutput {
        reports,
        table,
        files,
    })
}

/// Number of half-hour rows a list of forecasts occupies in the forecast CSV.
pub fn forecast_rows(results: &[ForecastResult]) -> usize {
    results.len() * SLOTS
}
