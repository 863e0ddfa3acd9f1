//! Penalised-regression-spline additive model for weekly average load.
//!
//! Each smooth is a B-spline expansion (tensor product for bivariate terms) with a
//! second-difference penalty and a sum-to-zero constraint over the training sample, so
//! the intercept carries the level. Smoothing parameters are picked by coordinate-wise
//! log-grid search on the GCV score `n·RSS/(n − tr H)²`.

pub mod basis;

use std::ops::Range;

use chrono::{Datelike, NaiveDate};
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{mape, rmse};
pub use basis::{difference_penalty, sum_to_zero_basis, tensor_row, BSplineBasis};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GamError {
    #[error("no weekly records")]
    Empty,
    #[error("covariate `{0}` is constant over the training records")]
    DegenerateCovariate(&'static str),
    #[error("{n} records cannot identify a model with {min} unpenalised parameters")]
    TooFewRecords { n: usize, min: usize },
    #[error("penalised normal equations are singular even after jitter")]
    Singular,
    #[error("smoothing vector has {got} entries for {terms} terms")]
    LambdaCount { got: usize, terms: usize },
    #[error("basis dimension {dim} too small for term `{term}`")]
    BasisTooSmall { term: &'static str, dim: usize },
}

/// One week of aggregated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyRecord {
    /// Weeks since the first full week of the series.
    pub t: i64,
    /// Monday of the week.
    pub week_start: NaiveDate,
    /// Weekly average load (MW).
    pub load: f64,
    pub load_prev: f64,
    /// Weekly median of the daily offset code.
    pub offset: i32,
    pub temp: f64,
    pub temp_prev: f64,
    pub cloud: f64,
    /// Week of year, 1–53.
    pub week_of_year: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Time,
    Offset,
    LoadPrev,
    Temp,
    TempPrev,
    Cloud,
    WeekOfYear,
}

impl Covariate {
    pub fn name(self) -> &'static str {
        match self {
            Covariate::Time => "t",
            Covariate::Offset => "offset",
            Covariate::LoadPrev => "load_prev",
            Covariate::Temp => "temp",
            Covariate::TempPrev => "temp_prev",
            Covariate::Cloud => "cloud",
            Covariate::WeekOfYear => "week_of_year",
        }
    }

    pub fn value(self, r: &WeeklyRecord) -> f64 {
        match self {
            Covariate::Time => r.t as f64,
            Covariate::Offset => r.offset as f64,
            Covariate::LoadPrev => r.load_prev,
            Covariate::Temp => r.temp,
            Covariate::TempPrev => r.temp_prev,
            Covariate::Cloud => r.cloud,
            // week 53 shares the boundary support of week 52
            Covariate::WeekOfYear => r.week_of_year.min(52) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotRule {
    Uniform,
    /// Interior knots at the weeks containing 1 September (time covariate only).
    SeptemberWeeks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermSpec {
    Smooth {
        covariate: Covariate,
        basis_dim: usize,
        knots: KnotRule,
    },
    Tensor {
        covariates: (Covariate, Covariate),
        dims: (usize, usize),
    },
}

impl TermSpec {
    pub fn smooth(covariate: Covariate, basis_dim: usize) -> Self {
        TermSpec::Smooth {
            covariate,
            basis_dim,
            knots: KnotRule::Uniform,
        }
    }

    pub fn tensor(a: Covariate, b: Covariate, dims: (usize, usize)) -> Self {
        TermSpec::Tensor {
            covariates: (a, b),
            dims,
        }
    }

    pub fn label(&self) -> String {
        match self {
            TermSpec::Smooth { covariate, .. } => format!("s({})", covariate.name()),
            TermSpec::Tensor { covariates, .. } => {
                format!("te({},{})", covariates.0.name(), covariates.1.name())
            }
        }
    }

    /// Unpenalised directions left after centering.
    fn null_dim(&self) -> usize {
        match self {
            TermSpec::Smooth { .. } => 1,
            TermSpec::Tensor { .. } => 3,
        }
    }
}

/// Weekly trend model with univariate smooths only.
pub fn preset_trend1() -> Vec<TermSpec> {
    vec![
        TermSpec::Smooth {
            covariate: Covariate::Time,
            basis_dim: 0,
            knots: KnotRule::SeptemberWeeks,
        },
        TermSpec::smooth(Covariate::Offset, 5),
        TermSpec::smooth(Covariate::LoadPrev, 8),
        TermSpec::smooth(Covariate::Temp, 8),
        TermSpec::smooth(Covariate::TempPrev, 8),
        TermSpec::smooth(Covariate::Cloud, 8),
    ]
}

/// Weekly trend model whose load, temperature and cloud effects vary with week of year.
pub fn preset_trend2() -> Vec<TermSpec> {
    let te = |c| TermSpec::tensor(c, Covariate::WeekOfYear, (5, 5));
    vec![
        TermSpec::Smooth {
            covariate: Covariate::Time,
            basis_dim: 0,
            knots: KnotRule::SeptemberWeeks,
        },
        TermSpec::smooth(Covariate::Offset, 5),
        te(Covariate::LoadPrev),
        te(Covariate::Temp),
        te(Covariate::TempPrev),
        te(Covariate::Cloud),
    ]
}

pub fn preset(name: &str) -> Option<Vec<TermSpec>> {
    match name {
        "trend1" => Some(preset_trend1()),
        "trend2" => Some(preset_trend2()),
        _ => None,
    }
}

/// A smooth built against a training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothTerm {
    pub spec: TermSpec,
    /// One basis for univariate terms, two for tensor terms.
    pub bases: Vec<BSplineBasis>,
    /// Sum-to-zero reparametrisation `Z` (raw dim × constrained dim).
    pub constraint: DMatrix<f64>,
    /// Penalty in constrained coordinates.
    pub penalty: DMatrix<f64>,
    pub lambda: f64,
    /// Columns of the full design (intercept is column 0).
    pub columns: Range<usize>,
}

impl SmoothTerm {
    pub fn basis_dim(&self) -> usize {
        self.bases.iter().map(BSplineBasis::dim).product()
    }

    pub fn covariates(&self) -> Vec<Covariate> {
        match &self.spec {
            TermSpec::Smooth { covariate, .. } => vec![*covariate],
            TermSpec::Tensor { covariates, .. } => vec![covariates.0, covariates.1],
        }
    }

    fn raw_row(&self, r: &WeeklyRecord) -> (Vec<f64>, bool) {
        let covs = self.covariates();
        let (a, out_a) = self.bases[0].eval(covs[0].value(r));
        if self.bases.len() == 1 {
            return (a, out_a);
        }
        let (b, out_b) = self.bases[1].eval(covs[1].value(r));
        (tensor_row(&a, &b), out_a || out_b)
    }

    /// Constrained design row for one record.
    pub fn row(&self, r: &WeeklyRecord) -> (Vec<f64>, bool) {
        let (raw, out) = self.raw_row(r);
        let z = &self.constraint;
        let row = (0..z.ncols())
            .map(|j| (0..z.nrows()).map(|i| raw[i] * z[(i, j)]).sum())
            .collect();
        (row, out)
    }
}

fn covariate_range(records: &[WeeklyRecord], c: Covariate) -> Result<(f64, f64), GamError> {
    let (lo, hi) = records
        .iter()
        .map(|r| c.value(r))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(GamError::DegenerateCovariate(c.name()));
    }
    Ok((lo, hi))
}

fn september_knots(records: &[WeeklyRecord]) -> Vec<f64> {
    records
        .iter()
        .filter(|r| {
            NaiveDate::from_ymd_opt(r.week_start.year(), 9, 1)
                .map(|sep1| {
                    let diff = (sep1 - r.week_start).num_days();
                    (0..7).contains(&diff)
                })
                .unwrap_or(false)
        })
        .map(|r| r.t as f64)
        .collect()
}

/// Smooth columns (intercept excluded) and per-term penalties.
#[derive(Debug, Clone)]
pub struct Design {
    /// `n × Σ (dimⱼ − 1)`.
    pub x: DMatrix<f64>,
    /// Column range of each term within `x`.
    pub blocks: Vec<Range<usize>>,
    /// Per-term penalty in constrained coordinates.
    pub penalties: Vec<DMatrix<f64>>,
}

impl Design {
    /// Block-diagonal penalty `Σⱼ λⱼ Sⱼ` over the smooth columns.
    pub fn block_penalty(&self, lambdas: &[f64]) -> DMatrix<f64> {
        let p = self.x.ncols();
        let mut s = DMatrix::zeros(p, p);
        for ((range, pen), lam) in self.blocks.iter().zip(&self.penalties).zip(lambdas) {
            let mut view = s.view_mut((range.start, range.start), (range.len(), range.len()));
            view += pen * *lam;
        }
        s
    }
}

/// Build bases, centering constraints and penalties for `specs` on `records`.
pub fn build_design(
    records: &[WeeklyRecord],
    specs: &[TermSpec],
) -> Result<(Design, Vec<SmoothTerm>), GamError> {
    if records.is_empty() {
        return Err(GamError::Empty);
    }
    let n = records.len();
    let mut terms = Vec::with_capacity(specs.len());
    let mut col = 1;
    for spec in specs {
        let (bases, raw_penalty) = match spec {
            TermSpec::Smooth {
                covariate,
                basis_dim,
                knots,
            } => {
                let (lo, hi) = covariate_range(records, *covariate)?;
                let basis = match knots {
                    KnotRule::Uniform => {
                        if *basis_dim < 3 {
                            return Err(GamError::BasisTooSmall {
                                term: covariate.name(),
                                dim: *basis_dim,
                            });
                        }
                        BSplineBasis::uniform(lo, hi, *basis_dim)
                    }
                    KnotRule::SeptemberWeeks => {
                        BSplineBasis::with_interior(lo, hi, &september_knots(records), 3)
                    }
                };
                let pen = difference_penalty(basis.dim(), 2);
                (vec![basis], pen)
            }
            TermSpec::Tensor { covariates, dims } => {
                if dims.0 < 3 || dims.1 < 3 {
                    return Err(GamError::BasisTooSmall {
                        term: covariates.0.name(),
                        dim: dims.0.min(dims.1),
                    });
                }
                let (lo_a, hi_a) = covariate_range(records, covariates.0)?;
                let (lo_b, hi_b) = covariate_range(records, covariates.1)?;
                let a = BSplineBasis::uniform(lo_a, hi_a, dims.0);
                let b = BSplineBasis::uniform(lo_b, hi_b, dims.1);
                let pa = difference_penalty(a.dim(), 2);
                let pb = difference_penalty(b.dim(), 2);
                let pen = pa.kronecker(&DMatrix::identity(b.dim(), b.dim()))
                    + DMatrix::identity(a.dim(), a.dim()).kronecker(&pb);
                (vec![a, b], pen)
            }
        };
        let mut term = SmoothTerm {
            spec: spec.clone(),
            bases,
            constraint: DMatrix::identity(1, 1),
            penalty: DMatrix::zeros(1, 1),
            lambda: 0.0,
            columns: 0..0,
        };
        let raw_dim = term.basis_dim();
        let mut sums = vec![0.0; raw_dim];
        for r in records {
            let (row, _) = term.raw_row(r);
            sums.iter_mut().zip(&row).for_each(|(s, v)| *s += v);
        }
        let z = sum_to_zero_basis(&sums);
        term.penalty = z.transpose() * &raw_penalty * &z;
        term.constraint = z;
        term.columns = col..col + raw_dim - 1;
        col += raw_dim - 1;
        terms.push(term);
    }

    let p = col - 1;
    let mut x = DMatrix::zeros(n, p);
    for (i, r) in records.iter().enumerate() {
        for term in &terms {
            let (row, _) = term.row(r);
            for (j, v) in row.into_iter().enumerate() {
                x[(i, term.columns.start - 1 + j)] = v;
            }
        }
    }
    let blocks = terms
        .iter()
        .map(|t| t.columns.start - 1..t.columns.end - 1)
        .collect();
    let penalties = terms.iter().map(|t| t.penalty.clone()).collect();
    Ok((
        Design {
            x,
            blocks,
            penalties,
        },
        terms,
    ))
}

/// Grid-search settings for the smoothing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamFitOptions {
    pub grid_points: usize,
    /// Grid in `log10` units relative to each term's `tr(XᵀX)/tr(S)` scale.
    pub log10_min: f64,
    pub log10_max: f64,
    pub sweeps: usize,
}

impl Default for GamFitOptions {
    fn default() -> Self {
        Self {
            grid_points: 30,
            log10_min: -4.0,
            log10_max: 8.0,
            sweeps: 2,
        }
    }
}

impl GamFitOptions {
    fn exponents(&self) -> Vec<f64> {
        let m = self.grid_points.max(2);
        (0..m)
            .map(|i| self.log10_min + (self.log10_max - self.log10_min) * i as f64 / (m - 1) as f64)
            .collect()
    }
}

/// A fitted weekly trend model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamModel {
    pub terms: Vec<SmoothTerm>,
    /// Intercept followed by every term's constrained coefficients.
    pub coefficients: Vec<f64>,
    pub gcv: f64,
    /// Effective degrees of freedom `tr H`.
    pub edf: f64,
    /// `1 − RSS/TSS`.
    pub pct_explained: f64,
    pub fitted_mape: f64,
    pub fitted_rmse: f64,
    pub n: usize,
    /// Ridge jitter had to be added to the normal equations.
    pub jittered: bool,
    /// Monday of the last training week.
    pub last_week: NaiveDate,
}

struct Solve {
    beta: DVector<f64>,
    rss: f64,
    edf: f64,
    gcv: f64,
    jittered: bool,
}

struct Normal {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl Normal {
    fn new(design: &Design, y: &[f64]) -> Self {
        let n = design.x.nrows();
        let p = design.x.ncols() + 1;
        let mut x = DMatrix::zeros(n, p);
        x.column_mut(0).fill(1.0);
        x.view_mut((0, 1), (n, p - 1)).copy_from(&design.x);
        let y = DVector::from_row_slice(y);
        Self {
            xtx: x.transpose() * &x,
            xty: x.transpose() * &y,
            x,
            y,
        }
    }

    fn solve(&self, design: &Design, lambdas: &[f64]) -> Result<Solve, GamError> {
        let p = self.xtx.nrows();
        let mut a = self.xtx.clone();
        let pen = design.block_penalty(lambdas);
        {
            let mut view = a.view_mut((1, 1), (p - 1, p - 1));
            view += &pen;
        }
        let mut jittered = false;
        let chol = match well_conditioned_cholesky(a.clone()) {
            Some(c) => c,
            None => {
                jittered = true;
                let mean_diag = a.diagonal().mean().abs().max(f64::MIN_POSITIVE);
                for i in 0..p {
                    a[(i, i)] += 1e-10 * mean_diag;
                }
                Cholesky::new(a).ok_or(GamError::Singular)?
            }
        };
        let beta = chol.solve(&self.xty);
        let resid = &self.y - &self.x * &beta;
        let rss = resid.norm_squared();
        let influence = chol.solve(&self.xtx);
        let edf = influence.trace();
        let n = self.y.len() as f64;
        let gcv = n * rss / (n - edf).powi(2);
        Ok(Solve {
            beta,
            rss,
            edf,
            gcv,
            jittered,
        })
    }
}

fn well_conditioned_cholesky(a: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(a)?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 1e-13 * max {
        Some(chol)
    } else {
        None
    }
}

fn check_identifiable(records: &[WeeklyRecord], specs: &[TermSpec]) -> Result<(), GamError> {
    let min = 1 + specs.iter().map(TermSpec::null_dim).sum::<usize>();
    if records.len() <= min {
        return Err(GamError::TooFewRecords {
            n: records.len(),
            min,
        });
    }
    Ok(())
}

/// Fit with GCV-selected smoothing parameters.
pub fn fit_gam(records: &[WeeklyRecord], specs: &[TermSpec]) -> Result<GamModel, GamError> {
    fit_gam_with(records, specs, &GamFitOptions::default())
}

pub fn fit_gam_with(
    records: &[WeeklyRecord],
    specs: &[TermSpec],
    opts: &GamFitOptions,
) -> Result<GamModel, GamError> {
    check_identifiable(records, specs)?;
    let (design, terms) = build_design(records, specs)?;
    let y: Vec<f64> = records.iter().map(|r| r.load).collect();
    let normal = Normal::new(&design, &y);

    let scales: Vec<f64> = design
        .blocks
        .iter()
        .zip(&design.penalties)
        .map(|(range, pen)| {
            let xtx_tr: f64 = range.clone().map(|c| normal.xtx[(c + 1, c + 1)]).sum();
            let s_tr = pen.trace();
            if s_tr > 0.0 {
                xtx_tr / s_tr
            } else {
                1.0
            }
        })
        .collect();
    let exps = opts.exponents();
    let mut idx = vec![exps.len() / 2; terms.len()];
    let lambdas_for = |idx: &[usize]| -> Vec<f64> {
        idx.iter()
            .zip(&scales)
            .map(|(&i, s)| s * 10f64.powf(exps[i]))
            .collect()
    };
    let mut best = normal.solve(&design, &lambdas_for(&idx))?;
    for _ in 0..opts.sweeps {
        for term in 0..terms.len() {
            for cand in 0..exps.len() {
                if cand == idx[term] {
                    continue;
                }
                let mut trial = idx.clone();
                trial[term] = cand;
                let s = normal.solve(&design, &lambdas_for(&trial))?;
                if s.gcv < best.gcv {
                    best = s;
                    idx = trial;
                }
            }
        }
    }
    finish(records, terms, &lambdas_for(&idx), best, &normal)
}

/// Fit at fixed smoothing parameters (absolute values, one per term).
pub fn fit_gam_fixed(
    records: &[WeeklyRecord],
    specs: &[TermSpec],
    lambdas: &[f64],
) -> Result<GamModel, GamError> {
    if lambdas.len() != specs.len() {
        return Err(GamError::LambdaCount {
            got: lambdas.len(),
            terms: specs.len(),
        });
    }
    check_identifiable(records, specs)?;
    let (design, terms) = build_design(records, specs)?;
    let y: Vec<f64> = records.iter().map(|r| r.load).collect();
    let normal = Normal::new(&design, &y);
    let s = normal.solve(&design, lambdas)?;
    finish(records, terms, lambdas, s, &normal)
}

fn finish(
    records: &[WeeklyRecord],
    mut terms: Vec<SmoothTerm>,
    lambdas: &[f64],
    s: Solve,
    normal: &Normal,
) -> Result<GamModel, GamError> {
    for (t, l) in terms.iter_mut().zip(lambdas) {
        t.lambda = *l;
    }
    let y: Vec<f64> = records.iter().map(|r| r.load).collect();
    let fitted: Vec<f64> = (&normal.x * &s.beta).iter().copied().collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let pct_explained = if tss > 0.0 { 1.0 - s.rss / tss } else { 1.0 };
    let fitted_mape = mape(&fitted, &y).unwrap_or(f64::NAN);
    let fitted_rmse = rmse(&fitted, &y).unwrap_or(f64::NAN);
    let last_week = records
        .iter()
        .map(|r| r.week_start)
        .max()
        .expect("records nonempty");
    Ok(GamModel {
        terms,
        coefficients: s.beta.iter().copied().collect(),
        gcv: s.gcv,
        edf: s.edf,
        pct_explained,
        fitted_mape,
        fitted_rmse,
        n: records.len(),
        jittered: s.jittered,
        last_week,
    })
}

/// Prediction with an extrapolation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GamPrediction {
    pub value: f64,
    pub extrapolated: bool,
}

impl GamModel {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    /// Contribution of one smooth to a record's prediction.
    pub fn term_value(&self, term: usize, r: &WeeklyRecord) -> (f64, bool) {
        let t = &self.terms[term];
        let (row, out) = t.row(r);
        let v = row
            .iter()
            .zip(&self.coefficients[t.columns.clone()])
            .map(|(a, b)| a * b)
            .sum();
        (v, out)
    }

    pub fn predict(&self, r: &WeeklyRecord) -> GamPrediction {
        let mut value = self.intercept();
        let mut extrapolated = false;
        for i in 0..self.terms.len() {
            let (v, out) = self.term_value(i, r);
            value += v;
            extrapolated |= out;
        }
        GamPrediction {
            value,
            extrapolated,
        }
    }
}

/// Sum of the fitted smooths plus intercept.
pub fn predict_gam(model: &GamModel, record: &WeeklyRecord) -> GamPrediction {
    model.predict(record)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub label: String,
    pub gcv: f64,
    pub edf: f64,
    pub pct_explained: f64,
    pub fitted_mape: f64,
    pub fitted_rmse: f64,
    pub holdout_mape: Option<f64>,
    pub holdout_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub first: ModelSummary,
    pub second: ModelSummary,
}

impl ComparisonReport {
    /// True when the second specification has the lower GCV score.
    pub fn second_preferred(&self) -> bool {
        self.second.gcv < self.first.gcv
    }
}

/// Fit two term sets on the same training records and score both on an optional holdout.
pub fn compare_models(
    train: &[WeeklyRecord],
    holdout: &[WeeklyRecord],
    first: (&str, &[TermSpec]),
    second: (&str, &[TermSpec]),
) -> Result<ComparisonReport, GamError> {
    let summarize = |label: &str, specs: &[TermSpec]| -> Result<ModelSummary, GamError> {
        let m = fit_gam(train, specs)?;
        let (holdout_mape, holdout_rmse) = if holdout.is_empty() {
            (None, None)
        } else {
            let pred: Vec<f64> = holdout.iter().map(|r| m.predict(r).value).collect();
            let truth: Vec<f64> = holdout.iter().map(|r| r.load).collect();
            (mape(&pred, &truth).ok(), rmse(&pred, &truth).ok())
        };
        Ok(ModelSummary {
            label: label.to_string(),
            gcv: m.gcv,
            edf: m.edf,
            pct_explained: m.pct_explained,
            fitted_mape: m.fitted_mape,
            fitted_rmse: m.fitted_rmse,
            holdout_mape,
            holdout_rmse,
        })
    };
    Ok(ComparisonReport {
        first: summarize(first.0, first.1)?,
        second: summarize(second.0, second.1)?,
    })
}
