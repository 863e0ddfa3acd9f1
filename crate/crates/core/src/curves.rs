//! Sampled curves on fixed grids and the quadrature-backed L2 geometry they live in.
//!
//! A [`Grid`] carries abscissae together with trapezoidal weights, so every inner
//! product, projection and operator discretisation downstream is a weighted sum.
//! Curves share their grid through an [`Arc`]; two curves are compatible when their
//! grids compare equal.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("grid needs at least 2 points, got {0}")]
    GridTooShort(usize),
    #[error("grid points must be strictly increasing (violated at index {0})")]
    NotIncreasing(usize),
    #[error("grid weights must be positive and finite (violated at index {0})")]
    BadWeight(usize),
    #[error("curve has {values} values but its grid has {grid} points")]
    LengthMismatch { values: usize, grid: usize },
    #[error("curve value at index {0} is not finite")]
    NonFinite(usize),
    #[error("curves are sampled on different grids")]
    GridMismatch,
    #[error("empty input")]
    EmptyInput,
    #[error("segment `{0}` has zero training variance")]
    DegenerateScale(&'static str),
}

/// Abscissae of a compact index set plus the quadrature weights used to integrate over it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Grid with composite trapezoidal weights.
    pub fn trapezoid(points: Vec<f64>) -> Result<Self, CurveError> {
        check_points(&points)?;
        let n = points.len();
        let mut weights = vec![0.0; n];
        weights[0] = 0.5 * (points[1] - points[0]);
        weights[n - 1] = 0.5 * (points[n - 1] - points[n - 2]);
        for i in 1..n - 1 {
            weights[i] = 0.5 * (points[i + 1] - points[i - 1]);
        }
        Ok(Self { points, weights })
    }

    /// `n` equispaced points spanning `[a, b]` with trapezoidal weights.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self, CurveError> {
        if n < 2 {
            return Err(CurveError::GridTooShort(n));
        }
        let h = (b - a) / (n - 1) as f64;
        Self::trapezoid((0..n).map(|i| a + h * i as f64).collect())
    }

    /// Grid with caller-supplied weights.
    pub fn with_weights(points: Vec<f64>, weights: Vec<f64>) -> Result<Self, CurveError> {
        check_points(&points)?;
        if weights.len() != points.len() {
            return Err(CurveError::LengthMismatch {
                values: weights.len(),
                grid: points.len(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(CurveError::BadWeight(i));
        }
        Ok(Self { points, weights })
    }

    /// Disjoint union of two grids. The second segment's abscissae are shifted to
    /// follow the first after a unit gap; each segment keeps its own weights, so the
    /// joined integral is the sum of the two segment integrals.
    pub fn join(first: &Grid, second: &Grid) -> Grid {
        let shift = first.points[first.len() - 1] + 1.0 - second.points[0];
        let mut points = first.points.clone();
        points.extend(second.points.iter().map(|p| p + shift));
        let mut weights = first.weights.clone();
        weights.extend_from_slice(&second.weights);
        Grid { points, weights }
    }

    /// Contiguous sub-grid `[start, end)` re-weighted by the trapezoid rule on its own span.
    pub fn slice(&self, start: usize, end: usize) -> Result<Grid, CurveError> {
        Grid::trapezoid(self.points[start..end].to_vec())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of weights, i.e. the measure of the index set.
    pub fn span(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_points(points: &[f64]) -> Result<(), CurveError> {
    if points.len() < 2 {
        return Err(CurveError::GridTooShort(points.len()));
    }
    for i in 1..points.len() {
        if !(points[i] > points[i - 1]) {
            return Err(CurveError::NotIncreasing(i));
        }
    }
    Ok(())
}

/// Half-hourly day grid: 48 points at 00:30, 01:00, …, 24:00 expressed as fractions of a day.
pub fn day_grid() -> Grid {
    Grid::trapezoid((1..=48).map(|k| k as f64 / 48.0).collect()).expect("static grid")
}

/// A real function sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CurveRepr", try_from = "CurveRepr")]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self, CurveError> {
        if values.len() != grid.len() {
            return Err(CurveError::LengthMismatch {
                values: values.len(),
                grid: grid.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CurveError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![c; n],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Self, CurveError> {
        let values = grid.points().iter().map(|&u| f(u)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_grid(&self, other: &Curve) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve, CurveError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Curve) -> Result<Curve, CurveError> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &Curve) -> Result<Curve, CurveError> {
        self.zip_with(other, |a, b| a + alpha * b)
    }

    pub fn scale(&self, alpha: f64) -> Curve {
        self.map(|v| v * alpha)
    }

    pub fn shift(&self, c: f64) -> Curve {
        self.map(|v| v + c)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Curve {
        Curve {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    fn zip_with(&self, other: &Curve, f: impl Fn(f64, f64) -> f64) -> Result<Curve, CurveError> {
        if !self.same_grid(other) {
            return Err(CurveError::GridMismatch);
        }
        Ok(Curve {
            grid: Arc::clone(&self.grid),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Quadrature L2 norm.
    pub fn norm(&self) -> f64 {
        inner_product(self, self).expect("same grid").max(0.0).sqrt()
    }

    /// Restriction to the index range `[start, end)`, on a freshly weighted sub-grid.
    pub fn restrict(&self, start: usize, end: usize) -> Result<Curve, CurveError> {
        let grid = Arc::new(self.grid.slice(start, end)?);
        Curve::new(grid, self.values[start..end].to_vec())
    }
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    grid: Grid,
    values: Vec<f64>,
}

impl From<Curve> for CurveRepr {
    fn from(c: Curve) -> Self {
        Self {
            grid: (*c.grid).clone(),
            values: c.values,
        }
    }
}

impl TryFrom<CurveRepr> for Curve {
    type Error = CurveError;

    fn try_from(r: CurveRepr) -> Result<Self, Self::Error> {
        let grid = Grid::with_weights(r.grid.points, r.grid.weights)?;
        Curve::new(Arc::new(grid), r.values)
    }
}

/// Quadrature approximation of the L2 inner product `∫ f g`.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64, CurveError> {
    if !f.same_grid(g) {
        return Err(CurveError::GridMismatch);
    }
    Ok(f.grid
        .weights()
        .iter()
        .zip(f.values.iter().zip(&g.values))
        .map(|(w, (a, b))| w * a * b)
        .sum())
}

/// Pointwise mean of a set of curves on a shared grid.
pub fn mean_curve(curves: &[Curve]) -> Result<Curve, CurveError> {
    let first = curves.first().ok_or(CurveError::EmptyInput)?;
    let mut acc = vec![0.0; first.len()];
    for c in curves {
        if !c.same_grid(first) {
            return Err(CurveError::GridMismatch);
        }
        for (a, v) in acc.iter_mut().zip(&c.values) {
            *a += v;
        }
    }
    let n = curves.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Curve::new(Arc::clone(&first.grid), acc)
}

/// Pooled location and scale of one regressor segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub mean: f64,
    pub sd: f64,
}

impl SegmentStats {
    /// Mean and (population) standard deviation pooled over every grid value of every curve.
    pub fn pooled(curves: &[Curve], label: &'static str) -> Result<Self, CurveError> {
        if curves.is_empty() {
            return Err(CurveError::EmptyInput);
        }
        let count: usize = curves.iter().map(Curve::len).sum();
        let mean = curves.iter().flat_map(|c| c.values.iter()).sum::<f64>() / count as f64;
        let var = curves
            .iter()
            .flat_map(|c| c.values.iter())
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / count as f64;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(CurveError::DegenerateScale(label));
        }
        Ok(Self { mean, sd })
    }

    pub fn apply(&self, c: &Curve) -> Curve {
        c.map(|v| (v - self.mean) / self.sd)
    }
}

/// Standardisation statistics for a joined (load, temperature) regressor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinStats {
    pub load: SegmentStats,
    pub temp: SegmentStats,
}

impl JoinStats {
    pub fn from_training(loads: &[Curve], temps: &[Curve]) -> Result<Self, CurveError> {
        Ok(Self {
            load: SegmentStats::pooled(loads, "load")?,
            temp: SegmentStats::pooled(temps, "temperature")?,
        })
    }
}

/// Standardise each segment with its training statistics and concatenate them onto the
/// joined grid. `joined_grid` must be `Grid::join(load.grid(), temp.grid())`; pass it in
/// so that every regressor of a sample shares one allocation.
pub fn standardize_and_join(
    load: &Curve,
    temp: &Curve,
    stats: &JoinStats,
    joined_grid: &Arc<Grid>,
) -> Result<Curve, CurveError> {
    if joined_grid.len() != load.len() + temp.len() {
        return Err(CurveError::GridMismatch);
    }
    let mut values = stats.load.apply(load).into_values();
    values.extend(stats.temp.apply(temp).into_values());
    Curve::new(Arc::clone(joined_grid), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Arc<Grid> {
        Arc::new(Grid::uniform(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn constant_one_integrates_to_interval_length() {
        let g = unit(48);
        let one = Curve::constant(g, 1.0);
        assert!((inner_product(&one, &one).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_curve_gives_zero() {
        let g = unit(48);
        let z = Curve::zeros(g.clone());
        let f = Curve::from_fn(g, |u| (7.0 * u).sin()).unwrap();
        assert_eq!(inner_product(&z, &f).unwrap(), 0.0);
    }

    #[test]
    fn u_squared_integral() {
        let g = unit(401);
        let f = Curve::from_fn(g, |u| u).unwrap();
        assert!((inner_product(&f, &f).unwrap() - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn trapezoid_weights_match_rule() {
        let g = Grid::trapezoid(vec![0.0, 0.1, 0.4, 1.0]).unwrap();
        let w = g.weights();
        assert!((w[0] - 0.05).abs() < 1e-15);
        assert!((w[1] - 0.2).abs() < 1e-15);
        assert!((w[2] - 0.45).abs() < 1e-15);
        assert!((w[3] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn bad_grids_rejected() {
        assert_eq!(Grid::trapezoid(vec![0.0]), Err(CurveError::GridTooShort(1)));
        assert_eq!(
            Grid::trapezoid(vec![0.0, 1.0, 1.0]),
            Err(CurveError::NotIncreasing(2))
        );
        assert_eq!(
            Grid::with_weights(vec![0.0, 1.0], vec![1.0, 0.0]),
            Err(CurveError::BadWeight(1))
        );
    }

    #[test]
    fn mismatched_grids_error() {
        let a = Curve::constant(unit(4), 1.0);
        let b = Curve::constant(unit(5), 1.0);
        assert_eq!(inner_product(&a, &b), Err(CurveError::GridMismatch));
        assert_eq!(mean_curve(&[a, b]), Err(CurveError::GridMismatch));
    }

    #[test]
    fn mean_curve_cases() {
        let g = Arc::new(Grid::uniform(0.0, 1.0, 2).unwrap());
        let a = Curve::new(g.clone(), vec![1.0, 3.0]).unwrap();
        let b = Curve::new(g.clone(), vec![3.0, 5.0]).unwrap();
        assert_eq!(mean_curve(&[a.clone(), b]).unwrap().values(), &[2.0, 4.0]);
        assert_eq!(mean_curve(&[a.clone(), a.clone()]).unwrap(), a);
        let m = mean_curve(&[a.clone(), a.scale(-1.0)]).unwrap();
        assert!(m.values().iter().all(|v| *v == 0.0));
        assert_eq!(mean_curve(&[]), Err(CurveError::EmptyInput));
    }

    #[test]
    fn non_finite_values_rejected() {
        assert_eq!(
            Curve::new(unit(3), vec![0.0, f64::NAN, 1.0]),
            Err(CurveError::NonFinite(1))
        );
    }

    #[test]
    fn standardize_constant_at_mean_and_plus_one_sd() {
        let g = unit(48);
        let joined = Arc::new(Grid::join(&g, &g));
        let loads: Vec<Curve> = (0..5)
            .map(|i| Curve::from_fn(g.clone(), |u| 1000.0 * (u * 6.0 + i as f64).sin()).unwrap())
            .collect();
        let temps: Vec<Curve> = (0..5)
            .map(|i| Curve::from_fn(g.clone(), |u| 10.0 + 5.0 * u + i as f64).unwrap())
            .collect();
        let stats = JoinStats::from_training(&loads, &temps).unwrap();
        let load = Curve::constant(g.clone(), stats.load.mean);
        let temp = Curve::constant(g.clone(), stats.temp.mean + stats.temp.sd);
        let x = standardize_and_join(&load, &temp, &stats, &joined).unwrap();
        assert!(x.values()[..48].iter().all(|v| v.abs() < 1e-12));
        assert!(x.values()[48..].iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn degenerate_segment_errors() {
        let g = unit(4);
        let flat = vec![Curve::constant(g.clone(), 3.0); 3];
        let ok: Vec<Curve> = (0..3).map(|i| Curve::constant(g.clone(), i as f64)).collect();
        assert_eq!(
            JoinStats::from_training(&ok, &flat),
            Err(CurveError::DegenerateScale("temperature"))
        );
    }

    #[test]
    fn joined_grid_keeps_segment_weights() {
        let a = Grid::uniform(0.0, 1.0, 48).unwrap();
        let b = Grid::uniform(-5.0, 30.0, 10).unwrap();
        let j = Grid::join(&a, &b);
        assert_eq!(j.len(), 58);
        assert!((j.span() - (a.span() + b.span())).abs() < 1e-12);
        assert!(j.points().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(&j.weights()[48..], b.weights());
    }
}
