//! End-to-end hybrid forecaster: weekly aggregation and detrending, day classes,
//! per-class-pair curve regressions, and the hybrid / oracle / baseline predictors.

pub mod calendar;
pub mod engine;
pub mod forecast;
pub mod pairs;
pub mod registry;
pub mod series;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::CurveError;
use crate::gam::GamError;
use crate::svdreg::{DimSelectConfig, SvdRegError};

pub use calendar::{
    calendar_offset, classify_day, day_type, fixed_holidays, segment, week_monday, week_of_year,
    DayClass, HolidaySet, DAY_TYPE_LABELS, SEGMENT_LABELS,
};
pub use engine::{Cadence, Forecaster, TrendState};
pub use forecast::{
    forecast_baseline, forecast_day, forecast_oracle, DayInputs, ForecastKind, ForecastResult,
};
pub use pairs::{build_training_pairs, Part, PartSample, TrainingPairs};
pub use registry::{audit_windows, fit_all_models, AuditViolation, ModelRegistry, PairModel};
pub use series::{
    detrend, weekly_aggregate, weekly_loads, DayGrids, HalfHourlySeries, WeatherSeries,
    WeekCovariates, SLOTS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    SvdReg(#[from] SvdRegError),
    #[error(transparent)]
    Gam(#[from] GamError),
    #[error("invalid series: {0}")]
    BadSeries(String),
    #[error("{} missing half-hours, first at {} slot {}", .gaps.len(), .gaps[0].0, .gaps[0].1)]
    MissingData { gaps: Vec<(NaiveDate, u8)> },
    #[error("need at least {needed} complete weeks, found {found}")]
    TooShort { needed: usize, found: usize },
    #[error("no trend value for the week containing {0}")]
    MissingTrend(NaiveDate),
    #[error("no weather data for {0}")]
    MissingWeather(NaiveDate),
    #[error("no load data for {0}")]
    MissingLoad(NaiveDate),
    #[error("class pair {prev}->{target} has {n} training pairs, need {n_min}")]
    InsufficientData {
        prev: DayClass,
        target: DayClass,
        n: usize,
        n_min: usize,
    },
    #[error("no model for class pair {prev}->{target}")]
    ModelUnavailable { prev: DayClass, target: DayClass },
    #[error("unknown trend preset `{0}`")]
    UnknownPreset(String),
    #[error("forecast horizon must be at least 1")]
    ZeroHorizon,
}

/// Regressor construction variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Previous day's residual curve.
    H1,
    /// Previous day's residual joined with the target day's temperature curve.
    H2,
    /// Half-day version of H1.
    H3,
    /// Half-day version of H2.
    H4,
}

impl Variant {
    pub fn uses_temperature(self) -> bool {
        matches!(self, Variant::H2 | Variant::H4)
    }

    pub fn half_day(self) -> bool {
        matches!(self, Variant::H3 | Variant::H4)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "H1" => Ok(Variant::H1),
            "H2" => Ok(Variant::H2),
            "H3" => Ok(Variant::H3),
            "H4" => Ok(Variant::H4),
            _ => Err(format!("unknown variant `{s}` (expected H1..H4)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressorSpec {
    pub variant: Variant,
    /// Half-day variants: regress the evening on the observed morning of the same day
    /// (forecast issued at noon) instead of on the predicted morning.
    pub intraday_update: bool,
}

impl RegressorSpec {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            intraday_update: true,
        }
    }

    pub fn uses_temperature(&self) -> bool {
        self.variant.uses_temperature()
    }

    pub fn half_day(&self) -> bool {
        self.variant.half_day()
    }
}

/// Everything the forecaster needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Trend preset name, `trend1` or `trend2`.
    pub preset: String,
    pub regressor: RegressorSpec,
    pub dim: DimSelectConfig,
    /// Upper bound on the number of regressor scores per scalar regression.
    pub k_max: usize,
    /// Class pairs with fewer training pairs get no model.
    pub n_min: usize,
    pub cadence: Cadence,
    /// Ignore data before this date.
    pub train_start: Option<NaiveDate>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            preset: "trend1".into(),
            regressor: RegressorSpec::new(Variant::H2),
            dim: DimSelectConfig::default(),
            k_max: 10,
            n_min: 15,
            cadence: Cadence::Daily,
            train_start: None,
        }
    }
}

impl PipelineConfig {
    pub fn term_specs(&self) -> Result<Vec<crate::gam::TermSpec>, PipelineError> {
        crate::gam::preset(&self.preset).ok_or_else(|| PipelineError::UnknownPreset(self.preset.clone()))
    }
}
