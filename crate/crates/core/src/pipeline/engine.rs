//! Rolling-origin forecaster over a load and weather history.
//!
//! For an issue date `S` the trend model sees only weeks that ended before the week of
//! `S`, and curve models see only response days before a cadence-dependent cutoff that
//! never exceeds `S`. Chains of several days feed each predicted residual back in as the
//! next regressor; weeks whose predecessor is not fully observed at `S` take the
//! predicted trend of that predecessor as their lagged load.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::calendar::{classify_day, week_monday, DayClass, HolidaySet};
use super::forecast::{
    forecast_baseline, forecast_class_mean, forecast_day, forecast_oracle, DayInputs,
    ForecastKind, ForecastResult,
};
use super::pairs::build_training_pairs;
use super::registry::{class_means, fit_pair_model, ClassMean, ModelRegistry, PairModel};
use super::series::{
    first_monday, week_covariates, week_record, weekly_loads, DayGrids, HalfHourlySeries,
    WeatherSeries, WeekCovariates,
};
use super::{PipelineConfig, PipelineError};
use crate::curves::Curve;
use crate::gam::{fit_gam, GamModel, TermSpec, WeeklyRecord};

/// How often models are refitted while rolling through forecast dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cadence {
    /// Curve models refitted for every issue date; trend refitted every week.
    Daily,
    /// Everything refitted on Mondays.
    Weekly,
    /// Models fitted once, before the first issue date.
    Once,
}

impl fmt::Display for Cadence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cadence::Daily => "daily",
            Cadence::Weekly => "weekly",
            Cadence::Once => "once",
        })
    }
}

impl FromStr for Cadence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "daily" => Ok(Cadence::Daily),
            "weekly" => Ok(Cadence::Weekly),
            "once" => Ok(Cadence::Once),
            _ => Err(format!("unknown cadence `{s}` (expected daily, weekly or once)")),
        }
    }
}

/// A fitted trend model and the residuals it induces.
#[derive(Debug, Clone)]
pub struct TrendState {
    pub gam: GamModel,
    /// Monday of the first week not used for fitting.
    pub cutoff: NaiveDate,
    pub first_week: NaiveDate,
    /// Trend of every week whose predecessor has an observed load.
    pub trend: BTreeMap<NaiveDate, f64>,
    /// Daily `load − trend` for every day whose week has a trend value.
    pub residuals: BTreeMap<NaiveDate, Curve>,
}

impl TrendState {
    /// Last calendar day of the trend training window.
    pub fn train_end(&self) -> NaiveDate {
        self.gam.last_week + Duration::days(6)
    }
}

/// Training records for weeks in `[from, cutoff)`.
pub fn training_records(
    loads: &BTreeMap<NaiveDate, f64>,
    covs: &BTreeMap<NaiveDate, WeekCovariates>,
    origin: NaiveDate,
    from: Option<NaiveDate>,
    cutoff: NaiveDate,
) -> Vec<WeeklyRecord> {
    loads
        .range(..cutoff)
        .filter(|(m, _)| from.is_none_or(|f| **m >= f))
        .filter(|(m, _)| **m + Duration::days(7) <= cutoff)
        .filter_map(|(m, l)| {
            let prev = loads.get(&(*m - Duration::days(7)))?;
            week_record(*m, origin, covs, *l, *prev)
        })
        .collect()
}

/// Trend values and residuals implied by `gam`.
pub fn trend_state(
    gam: GamModel,
    cutoff: NaiveDate,
    series: &HalfHourlySeries,
    loads: &BTreeMap<NaiveDate, f64>,
    covs: &BTreeMap<NaiveDate, WeekCovariates>,
    origin: NaiveDate,
    first_week: NaiveDate,
) -> Result<TrendState, PipelineError> {
    let mut trend = BTreeMap::new();
    for monday in covs.keys() {
        let Some(prev) = loads.get(&(*monday - Duration::days(7))) else {
            continue;
        };
        if let Some(rec) = week_record(*monday, origin, covs, 0.0, *prev) {
            trend.insert(*monday, gam.predict(&rec).value);
        }
    }
    let mut residuals = BTreeMap::new();
    for day in series.dates() {
        if let Some(level) = trend.get(&week_monday(day)) {
            let v: Vec<f64> = series
                .day(day)
                .expect("day in series")
                .iter()
                .map(|x| x - level)
                .collect();
            residuals.insert(day, DayGrids::day_curve(&v)?);
        }
    }
    Ok(TrendState {
        gam,
        cutoff,
        first_week,
        trend,
        residuals,
    })
}

/// Rolling-origin forecaster. Caches the current trend state and curve models.
pub struct Forecaster<'a> {
    load: &'a HalfHourlySeries,
    weather: &'a WeatherSeries,
    holidays: &'a HolidaySet,
    cfg: PipelineConfig,
    specs: Vec<TermSpec>,
    origin: NaiveDate,
    covs: BTreeMap<NaiveDate, WeekCovariates>,
    loads: BTreeMap<NaiveDate, f64>,
    once_start: Option<NaiveDate>,
    trend_cache: Option<Arc<TrendState>>,
    curve_cutoff: Option<NaiveDate>,
    pair_cache: BTreeMap<(DayClass, DayClass), Option<Arc<PairModel>>>,
    mean_cache: Option<Vec<ClassMean>>,
    registry: Option<Arc<ModelRegistry>>,
}

impl<'a> Forecaster<'a> {
    pub fn new(
        load: &'a HalfHourlySeries,
        weather: &'a WeatherSeries,
        holidays: &'a HolidaySet,
        cfg: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        let specs = cfg.term_specs()?;
        Ok(Self {
            load,
            weather,
            holidays,
            specs,
            origin: first_monday(load.start()),
            covs: week_covariates(weather),
            loads: weekly_loads(load),
            once_start: None,
            trend_cache: None,
            curve_cutoff: None,
            pair_cache: BTreeMap::new(),
            mean_cache: None,
            registry: None,
            cfg,
        })
    }

    /// Serve every forecast from a previously fitted trend model and registry.
    pub fn with_models(mut self, gam: GamModel, registry: ModelRegistry) -> Result<Self, PipelineError> {
        let cutoff = gam.last_week + Duration::days(7);
        let first_week = self.origin;
        let state = trend_state(
            gam,
            cutoff,
            self.load,
            &self.loads,
            &self.covs,
            self.origin,
            first_week,
        )?;
        self.once_start = Some(registry.cutoff);
        self.trend_cache = Some(Arc::new(state));
        self.curve_cutoff = Some(registry.cutoff);
        self.registry = Some(Arc::new(registry));
        self.cfg.cadence = Cadence::Once;
        Ok(self)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Week index origin: Monday of the first full week of the load series.
    pub fn origin(&self) -> NaiveDate {
        self.origin
    }

    /// Fix the information date used by [`Cadence::Once`].
    pub fn set_once_start(&mut self, date: NaiveDate) {
        self.once_start = Some(date);
    }

    fn cutoffs(&mut self, issue: NaiveDate) -> (NaiveDate, NaiveDate) {
        match self.cfg.cadence {
            Cadence::Daily => (week_monday(issue), issue),
            Cadence::Weekly => (week_monday(issue), week_monday(issue)),
            Cadence::Once => {
                let s = *self.once_start.get_or_insert(issue);
                (week_monday(s), s)
            }
        }
    }

    /// Trend state for weeks ending before `cutoff` (a Monday).
    pub fn trend_at(&mut self, cutoff: NaiveDate) -> Result<Arc<TrendState>, PipelineError> {
        if let Some(ts) = &self.trend_cache {
            if ts.cutoff == cutoff || self.registry.is_some() {
                return Ok(Arc::clone(ts));
            }
        }
        let records = training_records(
            &self.loads,
            &self.covs,
            self.origin,
            self.cfg.train_start.map(week_monday),
            cutoff,
        );
        let first_week = records.first().map(|r| r.week_start).unwrap_or(cutoff);
        let gam = fit_gam(&records, &self.specs)?;
        let ts = Arc::new(trend_state(
            gam,
            cutoff,
            self.load,
            &self.loads,
            &self.covs,
            self.origin,
            first_week,
        )?);
        self.trend_cache = Some(Arc::clone(&ts));
        self.pair_cache.clear();
        self.mean_cache = None;
        self.curve_cutoff = None;
        Ok(ts)
    }

    fn set_curve_cutoff(&mut self, cutoff: NaiveDate) {
        if self.curve_cutoff != Some(cutoff) {
            self.pair_cache.clear();
            self.mean_cache = None;
            self.curve_cutoff = Some(cutoff);
        }
    }

    fn usable_residuals(&self, ts: &TrendState) -> BTreeMap<NaiveDate, Curve> {
        match self.cfg.train_start {
            Some(start) => ts.residuals.range(start..).map(|(d, c)| (*d, c.clone())).collect(),
            None => ts.residuals.clone(),
        }
    }

    fn pair_model(
        &mut self,
        ts: &TrendState,
        prev: DayClass,
        target: DayClass,
    ) -> Option<Arc<PairModel>> {
        if let Some(reg) = &self.registry {
            return reg.get(prev, target).cloned().map(Arc::new);
        }
        if let Some(m) = self.pair_cache.get(&(prev, target)) {
            return m.clone();
        }
        let cutoff = self.curve_cutoff.expect("cutoff set before lookup");
        let residuals = self.usable_residuals(ts);
        let model = build_training_pairs(
            &residuals,
            Some(self.weather),
            self.holidays,
            prev,
            target,
            &self.cfg.regressor,
            cutoff,
            self.cfg.n_min,
        )
        .and_then(|p| fit_pair_model(&p, &self.cfg))
        .ok()
        .map(Arc::new);
        self.pair_cache.insert((prev, target), model.clone());
        model
    }

    fn class_mean(&mut self, ts: &TrendState, class: DayClass) -> Option<ClassMean> {
        if let Some(reg) = &self.registry {
            return reg.class_mean(class).cloned();
        }
        if self.mean_cache.is_none() {
            let cutoff = self.curve_cutoff.expect("cutoff set before lookup");
            let residuals = self.usable_residuals(ts);
            self.mean_cache = Some(class_means(&residuals, self.holidays, cutoff));
        }
        self.mean_cache
            .as_ref()
            .and_then(|v| v.iter().find(|c| c.class == class).cloned())
    }

    /// Trend for the week starting `monday` as known on `issue`.
    fn week_trend(
        &self,
        ts: &TrendState,
        monday: NaiveDate,
        issue: NaiveDate,
        predicted: &mut BTreeMap<NaiveDate, f64>,
    ) -> Result<f64, PipelineError> {
        if monday <= issue {
            return ts
                .trend
                .get(&monday)
                .copied()
                .ok_or(PipelineError::MissingTrend(monday));
        }
        if let Some(v) = predicted.get(&monday) {
            return Ok(*v);
        }
        let prev = self.week_trend(ts, monday - Duration::days(7), issue, predicted)?;
        let rec = week_record(monday, self.origin, &self.covs, 0.0, prev)
            .ok_or(PipelineError::MissingWeather(monday))?;
        let v = ts.gam.predict(&rec).value;
        predicted.insert(monday, v);
        Ok(v)
    }

    /// Forecast `horizon` consecutive days starting at `issue`, using only data observed
    /// before `issue` (plus the target day's temperature curve and, for half-day variants
    /// with intraday updates, the first target day's observed morning).
    pub fn forecast_chain(
        &mut self,
        issue: NaiveDate,
        horizon: usize,
        kinds: &[ForecastKind],
    ) -> Result<Vec<ForecastResult>, PipelineError> {
        if horizon == 0 {
            return Err(PipelineError::ZeroHorizon);
        }
        let (gam_cutoff, curve_cutoff) = self.cutoffs(issue);
        let ts = self.trend_at(gam_cutoff)?;
        self.set_curve_cutoff(curve_cutoff);
        let spec = self.cfg.regressor;
        let yesterday = issue - Duration::days(1);
        let mut prev_residual: Vec<f64> = ts
            .residuals
            .get(&yesterday)
            .ok_or(PipelineError::MissingLoad(yesterday))?
            .values()
            .to_vec();
        let mut predicted_trend = BTreeMap::new();
        let mut out = Vec::new();
        for step in 1..=horizon {
            let date = issue + Duration::days(step as i64 - 1);
            let trend = self.week_trend(&ts, week_monday(date), issue, &mut predicted_trend)?;
            let (prev_class, class) = (classify_day(date - Duration::days(1)), classify_day(date));
            let temp = self.weather.day_temp(date);
            if spec.uses_temperature() && temp.is_none() {
                return Err(PipelineError::MissingWeather(date));
            }
            let true_residual: Option<Vec<f64>> = self
                .load
                .day(date)
                .map(|v| v.iter().map(|x| x - trend).collect());
            let model = self.pair_model(&ts, prev_class, class);
            let fallback = match &model {
                Some(_) => None,
                None => Some(
                    self.class_mean(&ts, class)
                        .ok_or(PipelineError::ModelUnavailable { prev: prev_class, target: class })?,
                ),
            };
            let from_mean = |kind| {
                let m = fallback.as_ref().expect("fallback when model missing");
                forecast_class_mean(date, kind, trend, &m.mean, m.n, m.last_day)
            };
            let observed_today = if step == 1 { true_residual.as_deref() } else { None };
            let hybrid = match &model {
                Some(m) => forecast_day(
                    date,
                    trend,
                    m,
                    &spec,
                    &DayInputs {
                        prev_residual: &prev_residual,
                        temp,
                        observed_today,
                    },
                )?,
                None => from_mean(ForecastKind::Hybrid)?,
            };
            let mut results = Vec::with_capacity(kinds.len());
            for kind in kinds {
                let r = match (kind, &model) {
                    (ForecastKind::Hybrid, _) => hybrid.clone(),
                    (ForecastKind::Baseline, Some(m)) => forecast_baseline(date, trend, m)?,
                    (ForecastKind::Oracle, Some(m)) => match &true_residual {
                        Some(y) => forecast_oracle(date, trend, m, y)?,
                        None => continue,
                    },
                    (k, None) => from_mean(*k)?,
                };
                results.push(r);
            }
            prev_residual = hybrid.residual().into_values();
            for mut r in results {
                r.step = step;
                r.issued = issue;
                r.gam_train_end = Some(ts.train_end());
                out.push(r);
            }
        }
        Ok(out)
    }

    /// Day-ahead forecasts for every non-holiday date in `[from, to]`, plus chains of
    /// `horizon` days issued on each of those dates. Results for holiday targets are dropped.
    pub fn forecast_range(
        &mut self,
        from: NaiveDate,
        to: NaiveDate,
        horizon: usize,
        kinds: &[ForecastKind],
    ) -> Result<Vec<ForecastResult>, PipelineError> {
        let mut out = Vec::new();
        let mut issue = from;
        while issue <= to {
            if !self.holidays.contains(issue) {
                let chain = self.forecast_chain(issue, horizon, kinds)?;
                out.extend(chain.into_iter().filter(|r| !self.holidays.contains(r.date)));
            }
            issue += Duration::days(1);
        }
        Ok(out)
    }
}

/// Fit the trend model on every complete week before `cutoff` and the full registry on
/// every response day before `cutoff`.
pub fn fit_history(
    load: &HalfHourlySeries,
    weather: &WeatherSeries,
    holidays: &HolidaySet,
    cfg: &PipelineConfig,
    cutoff: NaiveDate,
    workers: usize,
) -> Result<(TrendState, ModelRegistry), PipelineError> {
    let specs = cfg.term_specs()?;
    let origin = first_monday(load.start());
    let loads = weekly_loads(load);
    let covs = week_covariates(weather);
    let gam_cutoff = week_monday(cutoff);
    let records = training_records(&loads, &covs, origin, cfg.train_start.map(week_monday), gam_cutoff);
    if records.len() < 2 {
        return Err(PipelineError::TooShort {
            needed: 2,
            found: records.len(),
        });
    }
    let first_week = records[0].week_start;
    let gam = fit_gam(&records, &specs)?;
    let ts = trend_state(gam, gam_cutoff, load, &loads, &covs, origin, first_week)?;
    let residuals: BTreeMap<NaiveDate, Curve> = match cfg.train_start {
        Some(s) => ts.residuals.range(s..).map(|(d, c)| (*d, c.clone())).collect(),
        None => ts.residuals.clone(),
    };
    let registry = super::registry::fit_all_models(
        &residuals,
        Some(weather),
        holidays,
        cfg,
        cutoff,
        workers,
    );
    Ok((ts, registry))
}
