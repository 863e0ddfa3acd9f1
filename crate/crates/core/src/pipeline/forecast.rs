//! Hybrid, oracle and baseline day-ahead predictors for a single target day.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::registry::PairModel;
use super::series::{DayGrids, HALF, SLOTS};
use super::{PipelineError, RegressorSpec};
use crate::curves::Curve;
use crate::svdreg::oracle_scores;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForecastKind {
    Hybrid,
    Oracle,
    Baseline,
}

impl ForecastKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ForecastKind::Hybrid => "hybrid",
            ForecastKind::Oracle => "oracle",
            ForecastKind::Baseline => "baseline",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hybrid" => Some(ForecastKind::Hybrid),
            "oracle" => Some(ForecastKind::Oracle),
            "baseline" => Some(ForecastKind::Baseline),
            _ => None,
        }
    }
}

/// A day's predicted load with its decomposition
/// `predicted = trend + mean + correction` at every half-hour.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub date: NaiveDate,
    pub kind: ForecastKind,
    /// 1 for day-ahead, `h` for the `h`-th day of a recursive chain.
    pub step: usize,
    pub predicted: Curve,
    pub trend_component: f64,
    pub mean_component: Curve,
    pub correction_component: Curve,
    pub r_hat_used: usize,
    pub n_train: usize,
    /// No pair model was available; the target class's mean residual was used.
    pub fallback: bool,
    /// Date the forecast was issued: no observation on or after it may enter training.
    pub issued: NaiveDate,
    pub gam_train_end: Option<NaiveDate>,
    pub curve_train_end: Option<NaiveDate>,
}

impl ForecastResult {
    pub fn assemble(
        date: NaiveDate,
        kind: ForecastKind,
        trend: f64,
        mean: Curve,
        correction: Curve,
    ) -> Result<Self, PipelineError> {
        let predicted = mean.add(&correction)?.shift(trend);
        Ok(Self {
            date,
            kind,
            step: 1,
            predicted,
            trend_component: trend,
            mean_component: mean,
            correction_component: correction,
            r_hat_used: 0,
            n_train: 0,
            fallback: false,
            issued: date,
            gam_train_end: None,
            curve_train_end: None,
        })
    }

    /// Predicted residual `mean + correction`.
    pub fn residual(&self) -> Curve {
        self.mean_component
            .add(&self.correction_component)
            .expect("components share the day grid")
    }

    fn with_model(mut self, model: &PairModel) -> Self {
        self.r_hat_used = model.r_hat();
        self.n_train = model.n_train;
        self.curve_train_end = Some(model.last_day);
        self
    }
}

/// Inputs available when forecasting one day.
#[derive(Debug, Clone, Copy)]
pub struct DayInputs<'a> {
    /// Previous day's residual (observed or predicted), 48 values.
    pub prev_residual: &'a [f64],
    /// Target day's temperature curve, 48 values; required by H2 and H4.
    pub temp: Option<&'a [f64]>,
    /// Target day's observed residual, used for its morning block when the evening is
    /// forecast after an intraday update.
    pub observed_today: Option<&'a [f64]>,
}

/// Hybrid prediction `trend + Ȳ + Σⱼ ξ̂ⱼ φ̂ⱼ`, assembled from half-day blocks when the
/// variant asks for them.
pub fn forecast_day(
    date: NaiveDate,
    trend: f64,
    model: &PairModel,
    spec: &RegressorSpec,
    inputs: &DayInputs<'_>,
) -> Result<ForecastResult, PipelineError> {
    if spec.uses_temperature() && inputs.temp.is_none() {
        return Err(PipelineError::MissingWeather(date));
    }
    let mut mean = vec![0.0; SLOTS];
    let mut corr = vec![0.0; SLOTS];
    for pm in &model.parts {
        let range = pm.part.response_range();
        let morning_pred: Vec<f64> = (0..HALF).map(|i| mean[i] + corr[i]).collect();
        let same_day: &[f64] = match (spec.intraday_update, inputs.observed_today) {
            (true, Some(obs)) => obs,
            _ => &morning_pred,
        };
        let piece = pm.part.load_piece(inputs.prev_residual, same_day);
        let x = pm.part.regressor(piece, inputs.temp, pm.stats.as_ref())?;
        let xi = pm.model.predict_scores(&x)?;
        let c = pm.model.correction(&xi)?;
        mean[range.clone()].copy_from_slice(pm.model.cross_cov.mean_y.values());
        corr[range].copy_from_slice(c.values());
    }
    let r = ForecastResult::assemble(
        date,
        ForecastKind::Hybrid,
        trend,
        DayGrids::day_curve(&mean)?,
        DayGrids::day_curve(&corr)?,
    )?;
    Ok(r.with_model(model))
}

/// Oracle prediction `trend + Ȳ + Σⱼ ξ̃ⱼ φ̂ⱼ` with `ξ̃` the projections of the true
/// residual. Evaluation only.
pub fn forecast_oracle(
    date: NaiveDate,
    trend: f64,
    model: &PairModel,
    true_residual: &[f64],
) -> Result<ForecastResult, PipelineError> {
    let truth = DayGrids::day_curve(true_residual)?;
    let mut corr = vec![0.0; SLOTS];
    for pm in &model.parts {
        let y = pm.part.response(&truth)?;
        let xi = oracle_scores(&y, &pm.model)?;
        let c = pm.model.correction(&xi)?;
        corr[pm.part.response_range()].copy_from_slice(c.values());
    }
    let r = ForecastResult::assemble(
        date,
        ForecastKind::Oracle,
        trend,
        model.mean_curve(),
        DayGrids::day_curve(&corr)?,
    )?;
    Ok(r.with_model(model))
}

/// Baseline `trend + Ȳ`: the hybrid predictor with the correction dropped.
pub fn forecast_baseline(
    date: NaiveDate,
    trend: f64,
    model: &PairModel,
) -> Result<ForecastResult, PipelineError> {
    let zero = Curve::zeros(std::sync::Arc::clone(&DayGrids::get().full));
    let r = ForecastResult::assemble(date, ForecastKind::Baseline, trend, model.mean_curve(), zero)?;
    Ok(r.with_model(model))
}

/// Fallback when the class pair has no model: `trend + class mean residual`.
pub fn forecast_class_mean(
    date: NaiveDate,
    kind: ForecastKind,
    trend: f64,
    mean: &Curve,
    n: usize,
    last_day: NaiveDate,
) -> Result<ForecastResult, PipelineError> {
    let zero = Curve::zeros(std::sync::Arc::clone(&DayGrids::get().full));
    let mut r = ForecastResult::assemble(date, kind, trend, mean.clone(), zero)?;
    r.fallback = true;
    r.n_train = n;
    r.curve_train_end = Some(last_day);
    Ok(r)
}
