//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use chrono::{Duration, NaiveDate};
use loadcurve::curves::{Curve, Grid};
use loadcurve::gam::WeeklyRecord;
use loadcurve::pipeline::{calendar_offset, week_of_year};
use loadcurve::svdreg::CurveSample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Non-uniform 4-point grid with trapezoid weights.
pub fn small_grid() -> Arc<Grid> {
    Arc::new(Grid::trapezoid(vec![0.0, 0.2, 0.5, 1.0]).unwrap())
}

/// `n` pairs with `Y = a + B·W·X + noise` on 4-point grids, plus a random coefficient
/// matrix; returns the sample and the generating `(a, B)`.
pub fn linear_pairs(n: usize, noise: f64, seed: u64) -> (CurveSample, Vec<f64>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = small_grid();
    let a: Vec<f64> = (0..4).map(|_| normal(&mut rng)).collect();
    let b: Vec<Vec<f64>> = (0..4).map(|_| (0..4).map(|_| normal(&mut rng)).collect()).collect();
    let w = g.weights().to_vec();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for _ in 0..n {
        let x: Vec<f64> = (0..4).map(|_| normal(&mut rng)).collect();
        let y: Vec<f64> = (0..4)
            .map(|u| {
                a[u] + (0..4).map(|v| b[u][v] * w[v] * x[v]).sum::<f64>() + noise * normal(&mut rng)
            })
            .collect();
        xs.push(Curve::new(Arc::clone(&g), x).unwrap());
        ys.push(Curve::new(Arc::clone(&g), y).unwrap());
    }
    (CurveSample::new(xs, ys).unwrap(), a, b)
}

/// Ordinary least squares of every response coordinate on `[1, X]`, solved through
/// the normal equations; returns a predictor for new regressors.
pub fn brute_force_ls(sample: &CurveSample) -> impl Fn(&[f64]) -> Vec<f64> {
    let n = sample.len();
    let p = sample.regressor_grid().len();
    let q = sample.response_grid().len();
    let design = nalgebra::DMatrix::from_fn(n, p + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            sample.regressors()[i].values()[j - 1]
        }
    });
    let resp = nalgebra::DMatrix::from_fn(n, q, |i, j| sample.responses()[i].values()[j]);
    let coef = (design.transpose() * &design)
        .lu()
        .solve(&(design.transpose() * resp))
        .expect("full-rank design");
    move |x: &[f64]| {
        (0..q)
            .map(|u| coef[(0, u)] + (0..p).map(|v| coef[(v + 1, u)] * x[v]).sum::<f64>())
            .collect()
    }
}

/// Known additive components of a synthetic weekly series, in the order of the
/// `trend1` preset terms.
pub mod truth {
    use super::PI;

    pub fn time(t: f64) -> f64 {
        1200.0 * t / 676.0 + 400.0 * (2.0 * PI * t / 260.0).sin()
    }
    pub fn offset(o: f64) -> f64 {
        -120.0 * o + 8.0 * o * o
    }
    pub fn load_prev(l: f64) -> f64 {
        0.08 * (l - 50_000.0)
    }
    pub fn temp(x: f64) -> f64 {
        500.0 * ((15.0 - x) / 3.0).exp().ln_1p()
    }
    pub fn temp_prev(x: f64) -> f64 {
        500.0 * (x / 4.0).sin()
    }
    pub fn cloud(c: f64) -> f64 {
        1500.0 * (c - 0.5).powi(2)
    }
}

/// 676 weekly records from 1996 with the `truth` components plus Gaussian noise whose
/// sd is 2% of the noiseless range. With `interact`, the load, temperature and cloud
/// effects are modulated by week of year. Returns the records and the per-record
/// component values.
pub fn weekly_records(seed: u64, interact: bool) -> (Vec<WeeklyRecord>, Vec<[f64; 6]>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = date(1996, 1, 1);
    let (mut anomaly, mut prev_temp) = (0.0f64, 10.0);
    let (mut recs, mut parts) = (Vec::new(), Vec::new());
    for k in 0..676i64 {
        let monday = start + Duration::weeks(k);
        let woy = week_of_year(monday);
        anomaly = 0.5 * anomaly + 2.0 * normal(&mut rng);
        let temp = 12.0 + 8.0 * (2.0 * PI * (woy as f64 - 16.0) / 52.0).sin() + anomaly;
        let cloud: f64 = rng.random();
        let load_prev = 47_000.0 + 6_000.0 * rng.random::<f64>();
        let offset = calendar_offset(monday);
        let mut c = [
            truth::time((k + 1) as f64),
            truth::offset(offset as f64),
            truth::load_prev(load_prev),
            truth::temp(temp),
            truth::temp_prev(prev_temp),
            truth::cloud(cloud),
        ];
        if interact {
            let s = (2.0 * PI * woy as f64 / 52.0).cos();
            c[2] *= 1.0 - 0.9 * s;
            c[3] *= 1.0 + 0.8 * s;
            c[5] *= 1.0 + s;
        }
        parts.push(c);
        recs.push(WeeklyRecord {
            t: k + 1,
            week_start: monday,
            load: 0.0,
            load_prev,
            offset,
            temp,
            temp_prev: prev_temp,
            cloud,
            week_of_year: woy,
        });
        prev_temp = temp;
    }
    let ys: Vec<f64> = parts.iter().map(|c| 50_000.0 + c.iter().sum::<f64>()).collect();
    let (lo, hi) = ys
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), y| (lo.min(*y), hi.max(*y)));
    for (r, y) in recs.iter_mut().zip(&ys) {
        r.load = y + 0.02 * (hi - lo) * normal(&mut rng);
    }
    (recs, parts)
}

/// Weighted L2 norm of `a − b` relative to that of `b`.
pub fn relative_l2(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let w = grid.weights();
    let num: f64 = (0..a.len()).map(|i| w[i] * (a[i] - b[i]).powi(2)).sum();
    let den: f64 = (0..a.len()).map(|i| w[i] * b[i].powi(2)).sum();
    (num / den).sqrt()
}

/// Config text for an end-to-end CLI run on a scenario, with all paths relative.
pub fn run_config(seed: u64, years: u32, start: &str, end: &str, cadence: &str, horizon: usize) -> String {
    format!(
        r#"[scenario]
seed = {seed}
years = {years}

[paths]
load = "data/load.csv"
weather = "data/weather.csv"
holidays = "data/holidays.txt"
truth = "data/truth.json"
store = "model.store"
output = "out"

[model]
preset = "trend1"
variant = "H2"
cadence = "{cadence}"
workers = 2

[evaluation]
start = "{start}"
end = "{end}"
horizon = {horizon}
kinds = ["hybrid", "oracle", "baseline"]
"#
    )
}
