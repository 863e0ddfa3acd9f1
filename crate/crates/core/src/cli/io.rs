//! CSV and text file formats read and written by the commands.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::Deserialize;
use thiserror::Error;

use crate::curves::Curve;
use crate::pipeline::{
    DayGrids, ForecastKind, ForecastResult, HalfHourlySeries, HolidaySet, PipelineError,
    WeatherSeries, SLOTS,
};

pub const LOAD_HEADER: [&str; 3] = ["date", "slot", "load_mw"];
pub const WEATHER_HEADER: [&str; 4] = ["date", "slot", "temp_c", "cloud_cover"];
pub const FORECAST_HEADER: [&str; 10] = [
    "date", "slot", "pred_mw", "trend_mw", "mean_mw", "corr_mw", "kind", "r_hat", "n_train", "flags",
];

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: &'static str },
    #[error("{path} line {line}: {message}")]
    Row {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{path}: {source}")]
    Series {
        path: PathBuf,
        source: PipelineError,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> FileError + '_ {
    move |source| FileError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn reader(path: &Path, required: &[&'static str]) -> Result<csv::Reader<File>, FileError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(csv_err(path))?.clone();
    for column in required {
        if !headers.iter().any(|h| h == *column) {
            return Err(FileError::MissingColumn {
                path: path.to_path_buf(),
                column,
            });
        }
    }
    Ok(rdr)
}

fn rows<T: for<'de> Deserialize<'de>>(
    path: &Path,
    required: &[&'static str],
) -> Result<Vec<T>, FileError> {
    let mut rdr = reader(path, required)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec.map_err(csv_err(path))?);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct LoadRow {
    date: NaiveDate,
    slot: u8,
    load_mw: f64,
}

#[derive(Deserialize)]
struct WeatherRow {
    date: NaiveDate,
    slot: u8,
    temp_c: f64,
    cloud_cover: f64,
}

pub fn read_load(path: &Path) -> Result<HalfHourlySeries, FileError> {
    let rows: Vec<LoadRow> = rows(path, &LOAD_HEADER)?;
    let rows: Vec<_> = rows.into_iter().map(|r| (r.date, r.slot, r.load_mw)).collect();
    HalfHourlySeries::from_slots(&rows).map_err(|source| FileError::Series {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_weather(path: &Path) -> Result<WeatherSeries, FileError> {
    let rows: Vec<WeatherRow> = rows(path, &WEATHER_HEADER)?;
    let rows: Vec<_> = rows
        .into_iter()
        .map(|r| (r.date, r.slot, r.temp_c, r.cloud_cover))
        .collect();
    WeatherSeries::from_slots(&rows).map_err(|source| FileError::Series {
        path: path.to_path_buf(),
        source,
    })
}

/// One `YYYY-MM-DD` per line; blank lines are ignored. A missing file means no holidays.
pub fn read_holidays(path: &Path) -> Result<HolidaySet, FileError> {
    if !path.exists() {
        return Ok(HolidaySet::default());
    }
    let file = File::open(path).map_err(io_err(path))?;
    let mut dates = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        let d = NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| FileError::Row {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: format!("`{s}`: {e}"),
        })?;
        dates.push(d);
    }
    Ok(HolidaySet::new(dates))
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, FileError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

/// Write rows of already formatted fields under `header`.
pub fn write_csv<I, R>(path: &Path, header: &[&str], records: I) -> Result<(), FileError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in records {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FileError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, text).map_err(io_err(path))
}

fn day_rows(start: NaiveDate, n_days: usize) -> impl Iterator<Item = (NaiveDate, usize)> {
    (0..n_days * SLOTS).map(move |i| (start + chrono::Duration::days((i / SLOTS) as i64), i))
}

pub fn write_load(path: &Path, series: &HalfHourlySeries) -> Result<(), FileError> {
    let v = series.values();
    write_csv(
        path,
        &LOAD_HEADER,
        day_rows(series.start(), series.n_days())
            .map(|(d, i)| [d.to_string(), (i % SLOTS + 1).to_string(), v[i].to_string()]),
    )
}

pub fn write_weather(path: &Path, series: &WeatherSeries) -> Result<(), FileError> {
    let (t, c) = (series.temp(), series.cloud());
    write_csv(
        path,
        &WEATHER_HEADER,
        day_rows(series.start(), series.n_days()).map(|(d, i)| {
            [
                d.to_string(),
                (i % SLOTS + 1).to_string(),
                t[i].to_string(),
                c[i].to_string(),
            ]
        }),
    )
}

pub fn write_holidays(path: &Path, holidays: &HolidaySet) -> Result<(), FileError> {
    let mut text = String::new();
    for d in holidays.iter() {
        text.push_str(&d.to_string());
        text.push('\n');
    }
    write_text(path, &text)
}

fn flags(r: &ForecastResult) -> String {
    let mut f = format!("step={}", r.step);
    if r.fallback {
        f.push_str(";fallback=class_mean");
    }
    f
}

/// 48 rows per forecast, in the order given.
pub fn write_forecasts(path: &Path, results: &[ForecastResult]) -> Result<(), FileError> {
    let mut w = writer(path)?;
    w.write_record(FORECAST_HEADER).map_err(csv_err(path))?;
    for r in results {
        let date = r.date.to_string();
        let (trend, fl) = (r.trend_component.to_string(), flags(r));
        let (r_hat, n_train) = (r.r_hat_used.to_string(), r.n_train.to_string());
        for s in 0..SLOTS {
            w.write_record([
                date.as_str(),
                &(s + 1).to_string(),
                &r.predicted.values()[s].to_string(),
                &trend,
                &r.mean_component.values()[s].to_string(),
                &r.correction_component.values()[s].to_string(),
                r.kind.as_str(),
                &r_hat,
                &n_train,
                &fl,
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))
}

#[derive(Deserialize)]
struct ForecastRow {
    date: NaiveDate,
    slot: u8,
    pred_mw: f64,
    trend_mw: f64,
    mean_mw: f64,
    corr_mw: f64,
    kind: String,
    r_hat: usize,
    n_train: usize,
    flags: String,
}

struct Partial {
    pred: Vec<Option<f64>>,
    mean: Vec<f64>,
    corr: Vec<f64>,
    trend: f64,
    r_hat: usize,
    n_train: usize,
    fallback: bool,
}

/// Read a forecast CSV back into results. Training-window fields are not stored in the
/// CSV and come back as `None`; `issued` is set to the target date.
pub fn read_forecasts(path: &Path) -> Result<Vec<ForecastResult>, FileError> {
    let mut rdr = reader(path, &FORECAST_HEADER)?;
    let mut acc: BTreeMap<(NaiveDate, ForecastKind, usize), Partial> = BTreeMap::new();
    for rec in rdr.deserialize::<ForecastRow>() {
        let row = rec.map_err(csv_err(path))?;
        let bad = |message: String| FileError::Row {
            path: path.to_path_buf(),
            line: 0,
            message,
        };
        let kind = ForecastKind::parse(&row.kind)
            .ok_or_else(|| bad(format!("{}: unknown kind `{}`", row.date, row.kind)))?;
        let mut step = 1;
        let mut fallback = false;
        for f in row.flags.split(';').filter(|f| !f.is_empty()) {
            match f.split_once('=') {
                Some(("step", v)) => {
                    step = v.parse().map_err(|_| bad(format!("{}: bad flag `{f}`", row.date)))?
                }
                Some(("fallback", _)) => fallback = true,
                _ => return Err(bad(format!("{}: unknown flag `{f}`", row.date))),
            }
        }
        if !(1..=SLOTS as u8).contains(&row.slot) {
            return Err(bad(format!("{}: slot {} outside 1..48", row.date, row.slot)));
        }
        let s = row.slot as usize - 1;
        let p = acc.entry((row.date, kind, step)).or_insert_with(|| Partial {
            pred: vec![None; SLOTS],
            mean: vec![0.0; SLOTS],
            corr: vec![0.0; SLOTS],
            trend: 0.0,
            r_hat: 0,
            n_train: 0,
            fallback: false,
        });
        if p.pred[s].replace(row.pred_mw).is_some() {
            return Err(bad(format!("{} {} step {step}: slot {} repeated", row.date, row.kind, row.slot)));
        }
        p.mean[s] = row.mean_mw;
        p.corr[s] = row.corr_mw;
        p.trend = row.trend_mw;
        p.r_hat = row.r_hat;
        p.n_train = row.n_train;
        p.fallback |= fallback;
    }
    let grid = Arc::clone(&DayGrids::get().full);
    let mut out = Vec::with_capacity(acc.len());
    for ((date, kind, step), p) in acc {
        let pred: Option<Vec<f64>> = p.pred.iter().copied().collect();
        let pred = pred.ok_or_else(|| FileError::Row {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{date} {} step {step}: fewer than 48 slots", kind.as_str()),
        })?;
        let curve = |v: Vec<f64>| {
            Curve::new(Arc::clone(&grid), v).map_err(|e| FileError::Series {
                path: path.to_path_buf(),
                source: e.into(),
            })
        };
        out.push(ForecastResult {
            date,
            kind,
            step,
            predicted: curve(pred)?,
            trend_component: p.trend,
            mean_component: curve(p.mean)?,
            correction_component: curve(p.corr)?,
            r_hat_used: p.r_hat,
            n_train: p.n_train,
            fallback: p.fallback,
            issued: date,
            gam_train_end: None,
            curve_train_end: None,
        });
    }
    Ok(out)
}

/// Actual loads by day, from a load CSV.
pub fn read_actuals(path: &Path) -> Result<BTreeMap<NaiveDate, Vec<f64>>, FileError> {
    let series = read_load(path)?;
    Ok(series
        .dates()
        .map(|d| (d, series.day(d).expect("covered").to_vec()))
        .collect())
}

/// Render rows as a left-aligned first column and right-aligned remaining columns.
pub fn text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let width: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain(std::iter::once(header[c].chars().count()))
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, cells: &[String]| {
        for (c, cell) in cells.iter().enumerate() {
            if c == 0 {
                out.push_str(&format!("{cell:<w$}", w = width[0]));
            } else {
                out.push_str(&format!("  {cell:>w$}", w = width[c]));
            }
        }
        out.push('\n');
    };
    line(&mut out, header);
    let total: usize = width.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for r in rows {
        line(&mut out, r);
    }
    out
}
