//! Per-class-pair curve regression models and the training-window audit.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::calendar::{classify_day, DayClass, HolidaySet};
use super::forecast::{ForecastKind, ForecastResult};
use super::pairs::{pairs_for_dates, realized_pairs, Part, TrainingPairs};
use super::series::{DayGrids, WeatherSeries, SLOTS};
use super::{PipelineConfig, PipelineError};
use crate::curves::{Curve, JoinStats};
use crate::svdreg::{default_scan_limit, fit_curve_regression, CrossCovModel, CurveRegressionModel};

/// Fitted curve regression for one block of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartModel {
    pub part: Part,
    pub model: CurveRegressionModel,
    pub stats: Option<JoinStats>,
}

/// Model serving forecasts for days of class `target` that follow a day of class `prev`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub prev: DayClass,
    pub target: DayClass,
    pub parts: Vec<PartModel>,
    pub n_train: usize,
    /// First and last response day of the training sample.
    pub first_day: NaiveDate,
    pub last_day: NaiveDate,
}

impl PairModel {
    /// Mean response `Ȳ` assembled over the full day.
    pub fn mean_curve(&self) -> Curve {
        let mut values = vec![0.0; SLOTS];
        for p in &self.parts {
            values[p.part.response_range()].copy_from_slice(p.model.cross_cov.mean_y.values());
        }
        DayGrids::day_curve(&values).expect("finite means")
    }

    /// Largest selected dimension over the parts.
    pub fn r_hat(&self) -> usize {
        self.parts.iter().map(|p| p.model.r_hat).max().unwrap_or(0)
    }
}

/// Fit every part of a training sample with `K = min(k_max, d)`.
pub fn fit_pair_model(
    pairs: &TrainingPairs,
    cfg: &PipelineConfig,
) -> Result<PairModel, PipelineError> {
    let mut parts = Vec::with_capacity(pairs.parts.len());
    for ps in &pairs.parts {
        let max = CrossCovModel::max_dim(&ps.sample);
        let d = cfg
            .dim
            .d
            .unwrap_or_else(|| default_scan_limit(&ps.sample).max(2))
            .min(max);
        let k = cfg.k_max.min(d).min(ps.sample.len() - 1).max(1);
        let mut model = fit_curve_regression(&ps.sample, &cfg.dim, k)?;
        model.compact();
        parts.push(PartModel {
            part: ps.part,
            model,
            stats: ps.stats,
        });
    }
    Ok(PairModel {
        prev: pairs.prev,
        target: pairs.target,
        parts,
        n_train: pairs.dates.len(),
        first_day: pairs.dates[0],
        last_day: *pairs.dates.last().expect("nonempty sample"),
    })
}

/// A class pair without a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsentPair {
    pub prev: DayClass,
    pub target: DayClass,
    pub n: usize,
    pub reason: String,
}

/// Mean training residual of one target class, used when no pair model applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMean {
    pub class: DayClass,
    pub mean: Curve,
    pub n: usize,
    pub last_day: NaiveDate,
}

/// Immutable set of pair models fitted on response days before `cutoff`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRegistry {
    pub cutoff: NaiveDate,
    /// Sorted by `(prev, target)`.
    pub models: Vec<PairModel>,
    pub absent: Vec<AbsentPair>,
    pub class_means: Vec<ClassMean>,
}

impl ModelRegistry {
    pub fn get(&self, prev: DayClass, target: DayClass) -> Option<&PairModel> {
        self.models
            .binary_search_by(|m| (m.prev, m.target).cmp(&(prev, target)))
            .ok()
            .map(|i| &self.models[i])
    }

    pub fn class_mean(&self, class: DayClass) -> Option<&ClassMean> {
        self.class_means.iter().find(|c| c.class == class)
    }

    /// Number of realised class pairs, with or without a model.
    pub fn realized(&self) -> usize {
        self.models.len() + self.absent.len()
    }
}

/// Mean residual per target class over non-holiday days before `cutoff`.
pub fn class_means(
    residuals: &BTreeMap<NaiveDate, Curve>,
    holidays: &HolidaySet,
    cutoff: NaiveDate,
) -> Vec<ClassMean> {
    let mut acc: BTreeMap<DayClass, (Vec<f64>, usize, NaiveDate)> = BTreeMap::new();
    for (day, curve) in residuals.range(..cutoff) {
        if holidays.contains(*day) {
            continue;
        }
        let e = acc
            .entry(classify_day(*day))
            .or_insert_with(|| (vec![0.0; curve.len()], 0, *day));
        e.0.iter_mut().zip(curve.values()).for_each(|(a, v)| *a += v);
        e.1 += 1;
        e.2 = *day;
    }
    acc.into_iter()
        .map(|(class, (sum, n, last_day))| {
            let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
            ClassMean {
                class,
                mean: DayGrids::day_curve(&mean).expect("finite"),
                n,
                last_day,
            }
        })
        .collect()
}

type PairJob = ((DayClass, DayClass), Vec<NaiveDate>);

/// Fit a model for every class pair realised by consecutive non-holiday days before
/// `cutoff` that has at least `n_min` pairs. Fits run on up to `workers` threads.
pub fn fit_all_models(
    residuals: &BTreeMap<NaiveDate, Curve>,
    weather: Option<&WeatherSeries>,
    holidays: &HolidaySet,
    cfg: &PipelineConfig,
    cutoff: NaiveDate,
    workers: usize,
) -> ModelRegistry {
    let mut absent = Vec::new();
    let mut jobs: Vec<PairJob> = Vec::new();
    for (key, dates) in realized_pairs(residuals, holidays, cutoff) {
        if dates.len() < cfg.n_min.max(2) {
            absent.push(AbsentPair {
                prev: key.0,
                target: key.1,
                n: dates.len(),
                reason: format!("fewer than {} pairs", cfg.n_min),
            });
        } else {
            jobs.push((key, dates));
        }
    }
    let fit = |(key, dates): &PairJob| -> Result<PairModel, AbsentPair> {
        pairs_for_dates(residuals, weather, &cfg.regressor, key.0, key.1, dates.clone())
            .and_then(|p| fit_pair_model(&p, cfg))
            .map_err(|e| AbsentPair {
                prev: key.0,
                target: key.1,
                n: dates.len(),
                reason: e.to_string(),
            })
    };
    let workers = workers.max(1).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers).max(1);
    let results: Vec<Result<PairModel, AbsentPair>> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(fit).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("fit worker panicked"))
            .collect()
    });
    let mut models = Vec::new();
    for r in results {
        match r {
            Ok(m) => models.push(m),
            Err(a) => absent.push(a),
        }
    }
    models.sort_by_key(|m| (m.prev, m.target));
    absent.sort_by_key(|a| (a.prev, a.target));
    ModelRegistry {
        cutoff,
        models,
        absent,
        class_means: class_means(residuals, holidays, cutoff),
    }
}

/// A forecast whose models saw data from on or after its issue date.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditViolation {
    pub date: NaiveDate,
    pub kind: ForecastKind,
    pub step: usize,
    pub issued: NaiveDate,
    pub window: &'static str,
    pub train_end: NaiveDate,
}

/// Check that every training window ends strictly before the forecast was issued, and
/// that no forecast is issued after its target date.
pub fn audit_windows(results: &[ForecastResult]) -> Vec<AuditViolation> {
    let mut out = Vec::new();
    for r in results {
        let windows = [("gam", r.gam_train_end), ("curve", r.curve_train_end)];
        for (name, end) in windows {
            let bad_end = end.filter(|e| *e >= r.issued || *e >= r.date);
            if let Some(train_end) = bad_end {
                out.push(AuditViolation {
                    date: r.date,
                    kind: r.kind,
                    step: r.step,
                    issued: r.issued,
                    window: name,
                    train_end,
                });
            }
        }
        if r.issued > r.date {
            out.push(AuditViolation {
                date: r.date,
                kind: r.kind,
                step: r.step,
                issued: r.issued,
                window: "issue",
                train_end: r.issued,
            });
        }
    }
    out
}
