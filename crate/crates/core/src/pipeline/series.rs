//! Half-hourly load and weather series, weekly aggregation and detrending.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use chrono::{Datelike, Duration, NaiveDate, Weekday};

use super::calendar::{calendar_offset, week_monday, week_of_year};
use super::PipelineError;
use crate::curves::{day_grid, Curve, Grid};
use crate::gam::{GamModel, WeeklyRecord};

/// Half-hours per day.
pub const SLOTS: usize = 48;
/// Half-hours per half-day block.
pub const HALF: usize = 24;

/// Shared grids for full days, half days and their joins with a temperature segment.
#[derive(Debug)]
pub struct DayGrids {
    pub full: Arc<Grid>,
    /// Slots 1–24 (00:30–12:00).
    pub morning: Arc<Grid>,
    /// Slots 25–48 (12:30–24:00).
    pub evening: Arc<Grid>,
    pub full_full: Arc<Grid>,
    pub evening_morning: Arc<Grid>,
    pub morning_evening: Arc<Grid>,
}

impl DayGrids {
    pub fn get() -> &'static DayGrids {
        static GRIDS: OnceLock<DayGrids> = OnceLock::new();
        GRIDS.get_or_init(|| {
            let full = day_grid();
            let morning = full.slice(0, HALF).expect("static grid");
            let evening = full.slice(HALF, SLOTS).expect("static grid");
            DayGrids {
                full_full: Arc::new(Grid::join(&full, &full)),
                evening_morning: Arc::new(Grid::join(&evening, &morning)),
                morning_evening: Arc::new(Grid::join(&morning, &evening)),
                full: Arc::new(full),
                morning: Arc::new(morning),
                evening: Arc::new(evening),
            }
        })
    }

    /// Full-day curve from 48 values.
    pub fn day_curve(values: &[f64]) -> Result<Curve, PipelineError> {
        Ok(Curve::new(Arc::clone(&Self::get().full), values.to_vec())?)
    }
}

fn day_index(start: NaiveDate, date: NaiveDate) -> Option<usize> {
    let d = (date - start).num_days();
    (d >= 0).then_some(d as usize)
}

/// Rows `(date, slot 1–48, value)` laid out on a contiguous calendar; reports every gap.
fn layout<const W: usize>(
    rows: &[(NaiveDate, u8, [f64; W])],
) -> Result<(NaiveDate, [Vec<f64>; W]), PipelineError> {
    let start = rows
        .iter()
        .map(|r| r.0)
        .min()
        .ok_or_else(|| PipelineError::BadSeries("no rows".into()))?;
    let end = rows.iter().map(|r| r.0).max().expect("nonempty");
    let days = (end - start).num_days() as usize + 1;
    let mut cols: [Vec<f64>; W] = std::array::from_fn(|_| vec![f64::NAN; days * SLOTS]);
    let mut seen = vec![false; days * SLOTS];
    for (date, slot, vals) in rows {
        if !(1..=SLOTS as u8).contains(slot) {
            return Err(PipelineError::BadSeries(format!("{date}: slot {slot} outside 1..48")));
        }
        let idx = (*date - start).num_days() as usize * SLOTS + (*slot as usize - 1);
        if seen[idx] {
            return Err(PipelineError::BadSeries(format!("{date}: duplicate slot {slot}")));
        }
        seen[idx] = true;
        for (c, v) in cols.iter_mut().zip(vals) {
            c[idx] = *v;
        }
    }
    let gaps: Vec<(NaiveDate, u8)> = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| !**s)
        .map(|(i, _)| {
            (
                start + Duration::days((i / SLOTS) as i64),
                (i % SLOTS + 1) as u8,
            )
        })
        .collect();
    if !gaps.is_empty() {
        return Err(PipelineError::MissingData { gaps });
    }
    Ok((start, cols))
}

/// Contiguous half-hourly load series (MW), 48 values per calendar day.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfHourlySeries {
    start: NaiveDate,
    values: Vec<f64>,
}

impl HalfHourlySeries {
    pub fn new(start: NaiveDate, values: Vec<f64>) -> Result<Self, PipelineError> {
        if values.is_empty() || !values.len().is_multiple_of(SLOTS) {
            return Err(PipelineError::BadSeries(format!(
                "length {} is not a positive multiple of 48",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(PipelineError::BadSeries(format!(
                "load at {} slot {} is not a positive number",
                start + Duration::days((i / SLOTS) as i64),
                i % SLOTS + 1
            )));
        }
        Ok(Self { start, values })
    }

    pub fn from_slots(rows: &[(NaiveDate, u8, f64)]) -> Result<Self, PipelineError> {
        let rows: Vec<_> = rows.iter().map(|&(d, s, v)| (d, s, [v])).collect();
        let (start, [values]) = layout(&rows)?;
        Self::new(start, values)
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last calendar day covered.
    pub fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.n_days() as i64 - 1)
    }

    pub fn n_days(&self) -> usize {
        self.values.len() / SLOTS
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn day(&self, date: NaiveDate) -> Option<&[f64]> {
        let i = day_index(self.start, date)?;
        (i < self.n_days()).then(|| &self.values[i * SLOTS..(i + 1) * SLOTS])
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.n_days()).map(move |i| self.start + Duration::days(i as i64))
    }

    /// The series cut to `[from, to]` (inclusive), if that range is covered.
    pub fn window(&self, from: NaiveDate, to: NaiveDate) -> Option<Self> {
        let a = day_index(self.start, from)?;
        let b = day_index(self.start, to)?;
        (a <= b && b < self.n_days()).then(|| Self {
            start: from,
            values: self.values[a * SLOTS..(b + 1) * SLOTS].to_vec(),
        })
    }
}

/// Half-hourly temperature (°C) and cloud cover (fraction in `[0, 1]`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSeries {
    start: NaiveDate,
    temp: Vec<f64>,
    cloud: Vec<f64>,
}

impl WeatherSeries {
    pub fn new(start: NaiveDate, temp: Vec<f64>, cloud: Vec<f64>) -> Result<Self, PipelineError> {
        if temp.is_empty() || !temp.len().is_multiple_of(SLOTS) || temp.len() != cloud.len() {
            return Err(PipelineError::BadSeries(format!(
                "weather columns have lengths {} and {}",
                temp.len(),
                cloud.len()
            )));
        }
        if temp.iter().any(|v| !v.is_finite()) {
            return Err(PipelineError::BadSeries("non-finite temperature".into()));
        }
        if cloud.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(PipelineError::BadSeries("cloud cover outside [0, 1]".into()));
        }
        Ok(Self { start, temp, cloud })
    }

    pub fn from_slots(rows: &[(NaiveDate, u8, f64, f64)]) -> Result<Self, PipelineError> {
        let rows: Vec<_> = rows.iter().map(|&(d, s, t, c)| (d, s, [t, c])).collect();
        let (start, [temp, cloud]) = layout(&rows)?;
        Self::new(start, temp, cloud)
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    pub fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.n_days() as i64 - 1)
    }

    pub fn n_days(&self) -> usize {
        self.temp.len() / SLOTS
    }

    pub fn temp(&self) -> &[f64] {
        &self.temp
    }

    pub fn cloud(&self) -> &[f64] {
        &self.cloud
    }

    pub fn day_temp(&self, date: NaiveDate) -> Option<&[f64]> {
        let i = day_index(self.start, date)?;
        (i < self.n_days()).then(|| &self.temp[i * SLOTS..(i + 1) * SLOTS])
    }

    pub fn day_cloud(&self, date: NaiveDate) -> Option<&[f64]> {
        let i = day_index(self.start, date)?;
        (i < self.n_days()).then(|| &self.cloud[i * SLOTS..(i + 1) * SLOTS])
    }
}

/// Weather and calendar covariates of one Monday-start week.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeekCovariates {
    pub monday: NaiveDate,
    pub offset: i32,
    pub temp: f64,
    pub cloud: f64,
    pub week_of_year: u32,
}

/// First Monday on or after `date`.
pub fn first_monday(date: NaiveDate) -> NaiveDate {
    let mut d = date;
    while d.weekday() != Weekday::Mon {
        d = d.succ_opt().expect("date in range");
    }
    d
}

fn week_days(monday: NaiveDate) -> impl Iterator<Item = NaiveDate> {
    (0..7).map(move |k| monday + Duration::days(k))
}

/// Covariates for every week fully covered by the weather series.
pub fn week_covariates(weather: &WeatherSeries) -> BTreeMap<NaiveDate, WeekCovariates> {
    let mut out = BTreeMap::new();
    let mut monday = first_monday(weather.start());
    while monday + Duration::days(6) <= weather.end() {
        let (mut t, mut c) = (0.0, 0.0);
        let mut offsets = Vec::with_capacity(7);
        for day in week_days(monday) {
            t += weather.day_temp(day).expect("covered").iter().sum::<f64>();
            c += weather.day_cloud(day).expect("covered").iter().sum::<f64>();
            offsets.push(calendar_offset(day));
        }
        offsets.sort_unstable();
        let n = (7 * SLOTS) as f64;
        out.insert(
            monday,
            WeekCovariates {
                monday,
                offset: offsets[3],
                temp: t / n,
                cloud: c / n,
                week_of_year: week_of_year(monday),
            },
        );
        monday += Duration::days(7);
    }
    out
}

/// Average load of every week fully covered by the series.
pub fn weekly_loads(series: &HalfHourlySeries) -> BTreeMap<NaiveDate, f64> {
    let mut out = BTreeMap::new();
    let mut monday = first_monday(series.start());
    while monday + Duration::days(6) <= series.end() {
        let sum: f64 = week_days(monday)
            .map(|d| series.day(d).expect("covered").iter().sum::<f64>())
            .sum();
        out.insert(monday, sum / (7 * SLOTS) as f64);
        monday += Duration::days(7);
    }
    out
}

/// Weekly record for `monday`, with `t` counted from `origin`. `None` when the week or
/// the one before it has no covariates.
pub fn week_record(
    monday: NaiveDate,
    origin: NaiveDate,
    covs: &BTreeMap<NaiveDate, WeekCovariates>,
    load: f64,
    load_prev: f64,
) -> Option<WeeklyRecord> {
    let cur = covs.get(&monday)?;
    let prev = covs.get(&(monday - Duration::days(7)))?;
    Some(WeeklyRecord {
        t: (monday - origin).num_days() / 7,
        week_start: monday,
        load,
        load_prev,
        offset: cur.offset,
        temp: cur.temp,
        temp_prev: prev.temp,
        cloud: cur.cloud,
        week_of_year: cur.week_of_year,
    })
}

/// Weekly records for every complete week that has a complete predecessor. `t` counts
/// weeks from the first Monday of the series, so the first record has `t = 1`.
pub fn weekly_aggregate(
    series: &HalfHourlySeries,
    weather: &WeatherSeries,
) -> Result<Vec<WeeklyRecord>, PipelineError> {
    let loads = weekly_loads(series);
    if loads.len() < 2 {
        return Err(PipelineError::TooShort {
            needed: 2,
            found: loads.len(),
        });
    }
    let covs = week_covariates(weather);
    let origin = first_monday(series.start());
    let mut out = Vec::with_capacity(loads.len());
    for (&monday, &load) in loads.iter().skip(1) {
        let prev = monday - Duration::days(7);
        let load_prev = loads[&prev];
        let rec = week_record(monday, origin, &covs, load, load_prev).ok_or_else(|| {
            let missing = if covs.contains_key(&monday) { prev } else { monday };
            PipelineError::MissingWeather(missing)
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Daily residual curves `load − weekly trend`, for every day of the weeks spanned by
/// `records`.
pub fn detrend(
    series: &HalfHourlySeries,
    gam: &GamModel,
    records: &[WeeklyRecord],
) -> Result<Vec<(NaiveDate, Curve)>, PipelineError> {
    let trend: BTreeMap<NaiveDate, f64> = records
        .iter()
        .map(|r| (r.week_start, gam.predict(r).value))
        .collect();
    let (Some(first), Some(last)) = (trend.keys().next(), trend.keys().next_back()) else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut day = *first;
    let end = *last + Duration::days(6);
    while day <= end {
        let level = *trend
            .get(&week_monday(day))
            .ok_or(PipelineError::MissingTrend(day))?;
        let values = series.day(day).ok_or(PipelineError::MissingLoad(day))?;
        let resid: Vec<f64> = values.iter().map(|v| v - level).collect();
        out.push((day, DayGrids::day_curve(&resid)?));
        day += Duration::days(1);
    }
    Ok(out)
}
