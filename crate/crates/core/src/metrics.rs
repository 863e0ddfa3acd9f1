//! Forecast error measures and the month / day-type breakdowns used for reporting.
//!
//! Group rows are unweighted means of per-day metrics. The pooled half-hour figures are
//! reported alongside for reference.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::pipeline::{day_type, ForecastKind, ForecastResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("prediction has {pred} values but truth has {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("cannot score an empty series")]
    Empty,
    #[error("truth value at index {0} is zero")]
    ZeroDenominator(usize),
    #[error("no actuals for forecast dates: {}", format_dates(.missing))]
    Alignment { missing: Vec<NaiveDate> },
}

fn format_dates(dates: &[NaiveDate]) -> String {
    dates
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn check(pred: &[f64], truth: &[f64]) -> Result<(), MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

/// Mean absolute percentage error, as a fraction.
pub fn mape(pred: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    let mut acc = 0.0;
    for (i, (p, t)) in pred.iter().zip(truth).enumerate() {
        if *t == 0.0 {
            return Err(MetricsError::ZeroDenominator(i));
        }
        acc += ((p - t) / t).abs();
    }
    Ok(acc / truth.len() as f64)
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64, MetricsError> {
    check(pred, truth)?;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum();
    Ok((sse / truth.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayScore {
    pub date: NaiveDate,
    pub kind: ForecastKind,
    pub step: usize,
    pub mape: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRow {
    pub label: String,
    pub days: usize,
    pub mape: f64,
    pub rmse: f64,
}

impl GroupRow {
    fn from_scores<'a>(label: String, scores: impl Iterator<Item = &'a DayScore>) -> Self {
        let (mut days, mut m, mut r) = (0usize, 0.0, 0.0);
        for s in scores {
            days += 1;
            m += s.mape;
            r += s.rmse;
        }
        let denom = days.max(1) as f64;
        Self {
            label,
            days,
            mape: m / denom,
            rmse: r / denom,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// Mean of per-day metrics.
    pub overall: GroupRow,
    /// MAPE/RMSE pooled over every half-hour instead of averaged per day.
    pub pooled_mape: f64,
    pub pooled_rmse: f64,
    /// Twelve rows, January first; empty months have `days == 0`.
    pub by_month: Vec<GroupRow>,
    /// Eight rows in day-type order.
    pub by_day_type: Vec<GroupRow>,
    /// Sorted by date, then kind, then step.
    pub per_day: Vec<DayScore>,
}

/// Score forecasts against actual half-hourly loads.
pub fn evaluate(
    forecasts: &[ForecastResult],
    actuals: &BTreeMap<NaiveDate, Vec<f64>>,
) -> Result<EvalReport, MetricsError> {
    let missing: Vec<NaiveDate> = forecasts
        .iter()
        .map(|f| f.date)
        .filter(|d| !actuals.contains_key(d))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::Alignment { missing });
    }
    let mut per_day = Vec::with_capacity(forecasts.len());
    let (mut abs_pct, mut sq, mut count) = (0.0, 0.0, 0usize);
    for f in forecasts {
        let truth = &actuals[&f.date];
        let pred = f.predicted.values();
        let m = mape(pred, truth)?;
        let r = rmse(pred, truth)?;
        abs_pct += m * truth.len() as f64;
        sq += r * r * truth.len() as f64;
        count += truth.len();
        per_day.push(DayScore {
            date: f.date,
            kind: f.kind,
            step: f.step,
            mape: m,
            rmse: r,
        });
    }
    per_day.sort_by(|a, b| {
        (a.date, a.kind, a.step)
            .partial_cmp(&(b.date, b.kind, b.step))
            .expect("total order on keys")
    });
    let by_month = (1..=12u32)
        .map(|m| {
            GroupRow::from_scores(
                format!("{m:02}"),
                per_day.iter().filter(move |s| s.date.month() == m),
            )
        })
        .collect();
    let by_day_type = (0..8u8)
        .map(|t| {
            GroupRow::from_scores(
                crate::pipeline::DAY_TYPE_LABELS[t as usize].to_string(),
                per_day.iter().filter(move |s| day_type(s.date) == t),
            )
        })
        .collect();
    let overall = GroupRow::from_scores("overall".into(), per_day.iter());
    let denom = count.max(1) as f64;
    Ok(EvalReport {
        overall,
        pooled_mape: abs_pct / denom,
        pooled_rmse: (sq / denom).sqrt(),
        by_month,
        by_day_type,
        per_day,
    })
}

/// Split forecasts by `(kind, step)` and evaluate each group separately.
pub fn evaluate_by_kind(
    forecasts: &[ForecastResult],
    actuals: &BTreeMap<NaiveDate, Vec<f64>>,
) -> Result<BTreeMap<(ForecastKind, usize), EvalReport>, MetricsError> {
    let mut groups: BTreeMap<(ForecastKind, usize), Vec<ForecastResult>> = BTreeMap::new();
    for f in forecasts {
        groups.entry((f.kind, f.step)).or_default().push(f.clone());
    }
    groups
        .into_iter()
        .map(|(k, v)| evaluate(&v, actuals).map(|r| (k, r)))
        .collect()
}
