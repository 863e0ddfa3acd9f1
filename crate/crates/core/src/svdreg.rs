//! Curve-on-curve linear regression through the singular value decomposition of the
//! sample cross-covariance operator.
//!
//! The operator `Σ̂(u, v) = n⁻¹ Σᵢ (Yᵢ − Ȳ)(u)(Xᵢ − X̄)(v)` is discretised on the two
//! quadrature grids and decomposed as the weighted matrix `W₁^½ Σ̂ W₂^½`. Its singular
//! triples give the L2-orthonormal bases `φ̂ⱼ` (response side) and `ψ̂ₖ` (regressor side);
//! projecting the centred curves on them yields scalar scores, and the curve regression
//! collapses to `r̂` ordinary least-squares fits `ξ̂·ⱼ ~ η̂·₁ … η̂·ₖ`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{inner_product, mean_curve, Curve, CurveError, Grid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvdRegError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("sample needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("{regressors} regressors but {responses} responses")]
    UnequalLengths { regressors: usize, responses: usize },
    #[error("requested dimension {requested} exceeds the maximum {max}")]
    DimensionTooLarge { requested: usize, max: usize },
    #[error("largest eigenvalue is not positive; the cross-covariance vanishes")]
    AllZeroSpectrum,
    #[error("need more eigenvalues than the scan limit: have {have}, need more than {d}")]
    SpectrumTooShort { have: usize, d: usize },
    #[error("{n} observations cannot support {k} regressor terms")]
    TooFewObservations { n: usize, k: usize },
    #[error("invalid dimension-selection config: {0}")]
    InvalidConfig(&'static str),
}

/// Paired regressor/response curves `{(Xᵢ, Yᵢ)}`.
#[derive(Debug, Clone)]
pub struct CurveSample {
    regressors: Vec<Curve>,
    responses: Vec<Curve>,
}

impl CurveSample {
    pub fn new(regressors: Vec<Curve>, responses: Vec<Curve>) -> Result<Self, SvdRegError> {
        if regressors.len() != responses.len() {
            return Err(SvdRegError::UnequalLengths {
                regressors: regressors.len(),
                responses: responses.len(),
            });
        }
        if regressors.len() < 2 {
            return Err(SvdRegError::TooFewPairs(regressors.len()));
        }
        if regressors.iter().any(|x| !x.same_grid(&regressors[0]))
            || responses.iter().any(|y| !y.same_grid(&responses[0]))
        {
            return Err(CurveError::GridMismatch.into());
        }
        Ok(Self {
            regressors,
            responses,
        })
    }

    pub fn len(&self) -> usize {
        self.regressors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regressors.is_empty()
    }

    pub fn regressors(&self) -> &[Curve] {
        &self.regressors
    }

    pub fn responses(&self) -> &[Curve] {
        &self.responses
    }

    pub fn regressor_grid(&self) -> &Arc<Grid> {
        self.regressors[0].grid()
    }

    pub fn response_grid(&self) -> &Arc<Grid> {
        self.responses[0].grid()
    }
}

/// Estimated singular triples `(λ̂ⱼ, φ̂ⱼ, ψ̂ⱼ)` of the cross-covariance operator together with
/// the sample means they were centred on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCovModel {
    pub mean_x: Curve,
    pub mean_y: Curve,
    /// `λ̂ⱼ = s²ⱼ`, nonincreasing, clamped at zero.
    pub lambdas: Vec<f64>,
    pub phis: Vec<Curve>,
    pub psis: Vec<Curve>,
    pub n: usize,
}

impl CrossCovModel {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// Largest `d` accepted by [`estimate_cross_cov`] for this sample.
    pub fn max_dim(sample: &CurveSample) -> usize {
        sample
            .response_grid()
            .len()
            .min(sample.regressor_grid().len())
            .min(sample.len())
    }
}

/// Centred sample cross-covariance `Σ̂` as a `|G₁| × |G₂|` matrix.
pub fn sample_cross_cov(sample: &CurveSample) -> Result<(DMatrix<f64>, Curve, Curve), SvdRegError> {
    let mean_y = mean_curve(sample.responses())?;
    let mean_x = mean_curve(sample.regressors())?;
    let n = sample.len();
    let yc = centred_matrix(sample.responses(), &mean_y);
    let xc = centred_matrix(sample.regressors(), &mean_x);
    let sigma = yc.transpose() * xc / n as f64;
    Ok((sigma, mean_x, mean_y))
}

fn centred_matrix(curves: &[Curve], mean: &Curve) -> DMatrix<f64> {
    let p = mean.len();
    DMatrix::from_fn(curves.len(), p, |i, j| {
        curves[i].values()[j] - mean.values()[j]
    })
}

/// Singular value decomposition of `Σ̂` in the quadrature-weighted L2 geometry, keeping the
/// leading `d` triples.
pub fn estimate_cross_cov(sample: &CurveSample, d: usize) -> Result<CrossCovModel, SvdRegError> {
    let max = CrossCovModel::max_dim(sample);
    if d > max {
        return Err(SvdRegError::DimensionTooLarge { requested: d, max });
    }
    let (sigma, mean_x, mean_y) = sample_cross_cov(sample)?;
    let gy = Arc::clone(sample.response_grid());
    let gx = Arc::clone(sample.regressor_grid());
    let sw1: Vec<f64> = gy.weights().iter().map(|w| w.sqrt()).collect();
    let sw2: Vec<f64> = gx.weights().iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(sigma.nrows(), sigma.ncols(), |i, j| {
        sw1[i] * sigma[(i, j)] * sw2[j]
    });
    let svd = a.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v requested");
    let s = &svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]).then(i.cmp(&j)));

    let mut lambdas = Vec::with_capacity(d);
    let mut phis = Vec::with_capacity(d);
    let mut psis = Vec::with_capacity(d);
    for &idx in order.iter().take(d) {
        let mut phi: Vec<f64> = (0..u.nrows()).map(|i| u[(i, idx)] / sw1[i]).collect();
        let mut psi: Vec<f64> = (0..v_t.ncols()).map(|j| v_t[(idx, j)] / sw2[j]).collect();
        // sign: largest-magnitude coordinate of φ̂ positive, ψ̂ follows
        let pivot = phi
            .iter()
            .copied()
            .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
            psi.iter_mut().for_each(|v| *v = -*v);
        }
        let sv = s[idx].max(0.0);
        lambdas.push(sv * sv);
        phis.push(Curve::new(Arc::clone(&gy), phi)?);
        psis.push(Curve::new(Arc::clone(&gx), psi)?);
    }
    Ok(CrossCovModel {
        mean_x,
        mean_y,
        lambdas,
        phis,
        psis,
        n: sample.len(),
    })
}

/// Scores `∫ (curve − mean) basisⱼ` for every basis function.
pub fn scores(curve: &Curve, basis: &[Curve], mean: &Curve) -> Result<Vec<f64>, SvdRegError> {
    let centred = curve.sub(mean)?;
    basis
        .iter()
        .map(|b| inner_product(&centred, b).map_err(SvdRegError::from))
        .collect()
}

/// Consecutive-ratio estimator: `argmin_{1≤j≤d} λ̂_{j+1}/λ̂ⱼ`.
///
/// Denominators below `1e-12·λ̂₁` are clamped to that floor. Ties go to the smallest `j`.
pub fn select_dim_ratio(lambdas: &[f64], d: usize) -> Result<usize, SvdRegError> {
    if d < 1 {
        return Err(SvdRegError::InvalidConfig("d must be at least 1"));
    }
    if lambdas.len() <= d {
        return Err(SvdRegError::SpectrumTooShort {
            have: lambdas.len(),
            d,
        });
    }
    let top = lambdas[0];
    if !(top > 0.0) {
        return Err(SvdRegError::AllZeroSpectrum);
    }
    let floor = 1e-12 * top;
    let mut best = 1;
    let mut best_ratio = f64::INFINITY;
    for j in 1..=d {
        let ratio = lambdas[j].max(0.0) / lambdas[j - 1].max(floor);
        if ratio < best_ratio {
            best_ratio = ratio;
            best = j;
        }
    }
    Ok(best)
}

/// Which penalised tail-sum criterion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Ic1,
    Ic2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimMethod {
    Ratio,
    Ic1,
    Ic2,
    IcMajority,
    /// Use exactly this many response components.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimSelectConfig {
    pub method: DimMethod,
    /// Largest dimension scanned. `None` means `min(20, n − 1, |G₁|, |G₂|)`.
    pub d: Option<usize>,
    /// Constant inside the IC₂ logarithm. `None` means `1e-3·λ̂₁/d²`.
    pub c_star: Option<f64>,
    /// Penalty constant for the single-τ criteria.
    pub tau: f64,
    /// Criterion scanned by majority voting.
    pub majority_criterion: Criterion,
    pub tau_grid_size: usize,
    /// `g(n) = n^g_exponent`.
    pub g_exponent: f64,
}

impl Default for DimSelectConfig {
    fn default() -> Self {
        Self {
            method: DimMethod::IcMajority,
            d: None,
            c_star: None,
            tau: 1.0,
            majority_criterion: Criterion::Ic2,
            tau_grid_size: 100,
            g_exponent: -0.5,
        }
    }
}

impl DimSelectConfig {
    pub fn validate(&self) -> Result<(), SvdRegError> {
        if matches!(self.d, Some(d) if d < 2) {
            return Err(SvdRegError::InvalidConfig("d must be at least 2"));
        }
        if matches!(self.c_star, Some(c) if !(c > 0.0)) {
            return Err(SvdRegError::InvalidConfig("c_star must be positive"));
        }
        if self.tau_grid_size < 2 {
            return Err(SvdRegError::InvalidConfig("tau_grid_size must be at least 2"));
        }
        if !(self.tau > 0.0) {
            return Err(SvdRegError::InvalidConfig("tau must be positive"));
        }
        if matches!(self.method, DimMethod::Fixed(0)) {
            return Err(SvdRegError::InvalidConfig("fixed dimension must be positive"));
        }
        Ok(())
    }

    pub fn penalty(&self, n: usize) -> f64 {
        (n as f64).powf(self.g_exponent)
    }

    fn c_star_for(&self, lambdas: &[f64], d: usize) -> f64 {
        self.c_star.unwrap_or_else(|| {
            let top = lambdas.first().copied().unwrap_or(0.0).max(0.0);
            let c = 1e-3 * top / (d * d) as f64;
            if c > 0.0 {
                c
            } else {
                f64::MIN_POSITIVE
            }
        })
    }
}

/// The τ-free part of the criterion, `F(q)` for `q = 0 … d−1`.
fn ic_base(lambdas: &[f64], d: usize, criterion: Criterion, c_star: f64) -> Vec<f64> {
    let scale = 1.0 / (d * d) as f64;
    let mut tails = vec![0.0; d + 1];
    for k in (0..d).rev() {
        tails[k] = tails[k + 1] + lambdas[k].max(0.0);
    }
    (0..d)
        .map(|q| {
            let tail = tails[q] * scale;
            match criterion {
                Criterion::Ic1 => tail,
                Criterion::Ic2 => (c_star + tail).ln(),
            }
        })
        .collect()
}

fn argmin_ic(base: &[f64], tau: f64, g: f64) -> usize {
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for (q, b) in base.iter().enumerate() {
        let v = b + tau * q as f64 * g;
        if v < best_val {
            best_val = v;
            best = q;
        }
    }
    best
}

/// Values of the information criterion at `q = 0 … d−1`.
pub fn ic_values(
    lambdas: &[f64],
    n: usize,
    d: usize,
    criterion: Criterion,
    c_star: f64,
    g_exponent: f64,
    tau: f64,
) -> Vec<f64> {
    let g = (n as f64).powf(g_exponent);
    ic_base(lambdas, d, criterion, c_star)
        .into_iter()
        .enumerate()
        .map(|(q, b)| b + tau * q as f64 * g)
        .collect()
}

/// `argmin_{0≤q<d} IC(q)` at a fixed penalty constant `tau`.
pub fn select_dim_ic(
    lambdas: &[f64],
    n: usize,
    d: usize,
    criterion: Criterion,
    cfg: &DimSelectConfig,
    tau: f64,
) -> Result<usize, SvdRegError> {
    check_ic_inputs(lambdas, n, d)?;
    let c_star = cfg.c_star_for(lambdas, d);
    let g = cfg.penalty(n);
    Ok(argmin_ic(&ic_base(lambdas, d, criterion, c_star), tau, g))
}

fn check_ic_inputs(lambdas: &[f64], n: usize, d: usize) -> Result<(), SvdRegError> {
    if d < 2 {
        return Err(SvdRegError::InvalidConfig("d must be at least 2"));
    }
    if n < 2 {
        return Err(SvdRegError::TooFewPairs(n));
    }
    if lambdas.len() < d {
        return Err(SvdRegError::SpectrumTooShort {
            have: lambdas.len(),
            d,
        });
    }
    Ok(())
}

/// Trace of the majority-voting scheme, enough to redraw the IC-versus-q fan.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MajorityDiagnostics {
    /// Largest τ at which the criterion still selects its small-τ answer.
    pub tau_lower: f64,
    /// Smallest τ at which the criterion selects q = 0.
    pub tau_upper: f64,
    /// `(τ, argmin_q IC(q))` over the voting grid.
    pub trace: Vec<(f64, usize)>,
    /// Vote count per `q`.
    pub votes: Vec<usize>,
    /// The spectrum gave no usable τ range and the ratio estimator was used instead.
    pub fell_back_to_ratio: bool,
}

/// τ majority voting: bracket `[τ_*, τ^*]` by bisection on the nonincreasing map
/// `h(τ) = argmin_q IC(q)`, evaluate `h` on an equispaced grid inside it and return the
/// `q` chosen most often (ties to the smaller `q`).
pub fn select_dim_majority(
    lambdas: &[f64],
    n: usize,
    d: usize,
    cfg: &DimSelectConfig,
) -> Result<(usize, MajorityDiagnostics), SvdRegError> {
    check_ic_inputs(lambdas, n, d)?;
    let c_star = cfg.c_star_for(lambdas, d);
    let g = cfg.penalty(n);
    let base = ic_base(lambdas, d, cfg.majority_criterion, c_star);
    let h = |tau: f64| argmin_ic(&base, tau, g);

    // q = 0 wins for every τ above the steepest chord from F(0).
    let steepest = (1..d)
        .map(|q| (base[0] - base[q]) / (q as f64 * g))
        .fold(0.0_f64, f64::max);
    let degenerate = !(steepest > 0.0 && steepest.is_finite());

    let fallback = |diag: MajorityDiagnostics| -> Result<(usize, MajorityDiagnostics), SvdRegError> {
        let r = if lambdas.len() > d {
            select_dim_ratio(lambdas, d)?
        } else {
            select_dim_ratio(lambdas, d - 1)?
        };
        Ok((
            r,
            MajorityDiagnostics {
                fell_back_to_ratio: true,
                ..diag
            },
        ))
    };
    if degenerate {
        return fallback(MajorityDiagnostics::default());
    }

    let hi_bracket = 2.0 * steepest;
    let start = h(0.0);
    // τ_*: last τ with h(τ) = h(0)
    let (mut lo, mut hi) = (0.0, hi_bracket);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) == start {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_lower = lo;
    // τ^*: first τ with h(τ) = 0
    let (mut lo, mut hi) = (0.0, hi_bracket);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) == 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let tau_upper = hi;

    if !(tau_upper - tau_lower > 1e-9 * tau_upper) || start == 0 {
        return fallback(MajorityDiagnostics {
            tau_lower,
            tau_upper,
            ..Default::default()
        });
    }

    let m = cfg.tau_grid_size;
    let step = (tau_upper - tau_lower) / (m - 1) as f64;
    let mut votes = vec![0usize; d];
    let mut trace = Vec::with_capacity(m);
    for i in 0..m {
        let tau = tau_lower + step * i as f64;
        let q = h(tau);
        votes[q] += 1;
        trace.push((tau, q));
    }
    let mut winner = 0;
    for q in 1..d {
        if votes[q] > votes[winner] {
            winner = q;
        }
    }
    Ok((
        winner,
        MajorityDiagnostics {
            tau_lower,
            tau_upper,
            trace,
            votes,
            fell_back_to_ratio: false,
        },
    ))
}

/// How the correlation dimension was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionDiagnostics {
    pub method: DimMethod,
    /// Scan limit actually used.
    pub d: usize,
    /// Raw selector output before clamping into `[1, d]`.
    pub raw: usize,
    pub majority: Option<MajorityDiagnostics>,
}

/// Choose `r̂` from a spectrum. The result is always at least 1.
pub fn select_dimension(
    lambdas: &[f64],
    n: usize,
    cfg: &DimSelectConfig,
) -> Result<(usize, SelectionDiagnostics), SvdRegError> {
    cfg.validate()?;
    let d = cfg.d.unwrap_or(20).min(lambdas.len());
    if d < 2 && !matches!(cfg.method, DimMethod::Fixed(_)) {
        return Err(SvdRegError::InvalidConfig("spectrum too short to select a dimension"));
    }
    let mut majority = None;
    let raw = match cfg.method {
        DimMethod::Fixed(r) => {
            if r > lambdas.len() {
                return Err(SvdRegError::DimensionTooLarge {
                    requested: r,
                    max: lambdas.len(),
                });
            }
            r
        }
        DimMethod::Ratio => {
            let d_ratio = if lambdas.len() > d { d } else { d - 1 };
            select_dim_ratio(lambdas, d_ratio)?
        }
        DimMethod::Ic1 => select_dim_ic(lambdas, n, d, Criterion::Ic1, cfg, cfg.tau)?,
        DimMethod::Ic2 => select_dim_ic(lambdas, n, d, Criterion::Ic2, cfg, cfg.tau)?,
        DimMethod::IcMajority => {
            let (q, diag) = select_dim_majority(lambdas, n, d, cfg)?;
            majority = Some(diag);
            q
        }
    };
    let r = raw.clamp(1, lambdas.len());
    Ok((
        r,
        SelectionDiagnostics {
            method: cfg.method,
            d,
            raw,
            majority,
        },
    ))
}

/// Fitted reduction of the curve regression to `r̂` scalar regressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRegressionModel {
    pub cross_cov: CrossCovModel,
    pub r_hat: usize,
    pub k: usize,
    /// `betas[j][k] = β̂ⱼₖ`, `r̂ × K`.
    pub betas: Vec<Vec<f64>>,
    /// Per-component residual variance `RSSⱼ/(n − K)`.
    pub residual_variances: Vec<f64>,
    /// `(HᵀH)⁻¹` diagonal of the regressor score matrix, for standard errors.
    pub design_inverse_diag: Vec<f64>,
    pub selection: SelectionDiagnostics,
    /// The regressor score matrix was rank deficient; a minimum-norm solution was used.
    pub rank_deficient: bool,
}

impl CurveRegressionModel {
    pub fn n(&self) -> usize {
        self.cross_cov.n
    }

    /// Drop singular functions beyond those the fitted regressions use.
    pub fn compact(&mut self) {
        self.cross_cov.phis.truncate(self.r_hat);
        self.cross_cov.psis.truncate(self.k);
    }

    /// Standard error of `β̂ⱼₖ`.
    pub fn std_error(&self, j: usize, k: usize) -> f64 {
        (self.residual_variances[j] * self.design_inverse_diag[k]).sqrt()
    }

    /// Predicted response scores `ξ̂ⱼ = Σₖ β̂ⱼₖ η̂ₖ`.
    pub fn predict_scores(&self, x: &Curve) -> Result<Vec<f64>, SvdRegError> {
        let eta = scores(x, &self.cross_cov.psis[..self.k], &self.cross_cov.mean_x)?;
        Ok(self
            .betas
            .iter()
            .map(|row| row.iter().zip(&eta).map(|(b, e)| b * e).sum())
            .collect())
    }

    /// `Σⱼ scoresⱼ φ̂ⱼ`, the correction added on top of the mean response.
    pub fn correction(&self, scores: &[f64]) -> Result<Curve, SvdRegError> {
        let mut out = Curve::zeros(Arc::clone(self.cross_cov.mean_y.grid()));
        for (s, phi) in scores.iter().zip(&self.cross_cov.phis) {
            out = out.axpy(*s, phi)?;
        }
        Ok(out)
    }

    /// `Ȳ + Σⱼ scoresⱼ φ̂ⱼ`.
    pub fn reconstruct(&self, scores: &[f64]) -> Result<Curve, SvdRegError> {
        Ok(self.cross_cov.mean_y.add(&self.correction(scores)?)?)
    }

    /// The implied coefficient surface `β(u, v) = Σⱼₖ β̂ⱼₖ φ̂ⱼ(u) ψ̂ₖ(v)` on the grids.
    pub fn coefficient_surface(&self) -> DMatrix<f64> {
        let cc = &self.cross_cov;
        let p1 = cc.mean_y.len();
        let p2 = cc.mean_x.len();
        let mut out = DMatrix::zeros(p1, p2);
        for (j, row) in self.betas.iter().enumerate() {
            let phi = cc.phis[j].values();
            for (k, b) in row.iter().enumerate() {
                let psi = cc.psis[k].values();
                for u in 0..p1 {
                    for v in 0..p2 {
                        out[(u, v)] += b * phi[u] * psi[v];
                    }
                }
            }
        }
        out
    }
}

/// Default scan limit `min(20, n − 1, |G₁|, |G₂|)`.
pub fn default_scan_limit(sample: &CurveSample) -> usize {
    20.min(sample.len() - 1)
        .min(sample.response_grid().len())
        .min(sample.regressor_grid().len())
}

/// Fit the reduced model: SVD, dimension selection, then one no-intercept OLS per
/// retained response component on the first `k` regressor scores.
pub fn fit_curve_regression(
    sample: &CurveSample,
    cfg: &DimSelectConfig,
    k: usize,
) -> Result<CurveRegressionModel, SvdRegError> {
    cfg.validate()?;
    let n = sample.len();
    if n <= k {
        return Err(SvdRegError::TooFewObservations { n, k });
    }
    let max = CrossCovModel::max_dim(sample);
    let d = match cfg.d {
        Some(d) if d > max => {
            return Err(SvdRegError::DimensionTooLarge { requested: d, max });
        }
        Some(d) => d,
        None => default_scan_limit(sample).max(2).min(max),
    };
    if k == 0 || k > d {
        return Err(SvdRegError::DimensionTooLarge { requested: k, max: d });
    }
    let cross_cov = estimate_cross_cov(sample, max)?;
    let sel_cfg = DimSelectConfig {
        d: Some(d),
        ..cfg.clone()
    };
    let (r_hat, selection) = select_dimension(&cross_cov.lambdas, n, &sel_cfg)?;
    let r_hat = r_hat.min(d.max(1));

    let eta: Vec<Vec<f64>> = sample
        .regressors()
        .iter()
        .map(|x| scores(x, &cross_cov.psis[..k], &cross_cov.mean_x))
        .collect::<Result<_, _>>()?;
    let xi: Vec<Vec<f64>> = sample
        .responses()
        .iter()
        .map(|y| scores(y, &cross_cov.phis[..r_hat], &cross_cov.mean_y))
        .collect::<Result<_, _>>()?;

    let h = DMatrix::from_fn(n, k, |i, c| eta[i][c]);
    let svd = h.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * f64::EPSILON * n.max(k) as f64;
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let rank_deficient = rank < k;

    // pseudo-inverse diagonal of (HᵀH)⁻¹ = V S⁻² Vᵀ
    let v_t = svd.v_t.as_ref().expect("v requested");
    let design_inverse_diag = (0..k)
        .map(|c| {
            (0..svd.singular_values.len())
                .filter(|&i| svd.singular_values[i] > tol)
                .map(|i| v_t[(i, c)].powi(2) / svd.singular_values[i].powi(2))
                .sum()
        })
        .collect();

    let mut betas = Vec::with_capacity(r_hat);
    let mut residual_variances = Vec::with_capacity(r_hat);
    let xi = DMatrix::from_fn(n, r_hat, |i, j| xi[i][j]);
    for j in 0..r_hat {
        let target: DVector<f64> = xi.column(j).into_owned();
        let beta = svd.solve(&target, tol).expect("u and v computed");
        let resid = &target - &h * &beta;
        let dof = (n - k).max(1) as f64;
        residual_variances.push(resid.norm_squared() / dof);
        betas.push(beta.iter().copied().collect());
    }

    Ok(CurveRegressionModel {
        cross_cov,
        r_hat,
        k,
        betas,
        residual_variances,
        design_inverse_diag,
        selection,
        rank_deficient,
    })
}

/// Hybrid prediction of the response curve for a new regressor.
pub fn predict_response_curve(
    model: &CurveRegressionModel,
    x: &Curve,
) -> Result<Curve, SvdRegError> {
    let xi = model.predict_scores(x)?;
    model.reconstruct(&xi)
}

/// Projections of the true response on the retained `φ̂ⱼ` (infeasible in operation).
pub fn oracle_scores(y_true: &Curve, model: &CurveRegressionModel) -> Result<Vec<f64>, SvdRegError> {
    scores(
        y_true,
        &model.cross_cov.phis[..model.r_hat],
        &model.cross_cov.mean_y,
    )
}
