//! Seeded synthetic load and weather histories with a known ground truth.
//!
//! Half-hourly load on day `i` is
//! `trend(week) + profile(day type) + Σⱼ aᵢⱼ ℓⱼ(u) + noise`, where the loadings `ℓⱼ` are
//! orthonormal in the day grid's quadrature inner product and have zero arithmetic mean,
//! and each score sequence `aᵢⱼ` is a stationary AR(1) with coefficient `ρⱼ` and variance
//! `σⱼ²`. Consecutive days therefore have a cross-covariance of rank `true_r` with
//! singular values `ρⱼσⱼ²`. The weekly trend responds to weekly temperature, cloud cover
//! and the calendar offset code.

use std::f64::consts::PI;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curves::{day_grid, Curve, Grid};
use crate::pipeline::{
    calendar_offset, day_type, fixed_holidays, week_monday, HalfHourlySeries, HolidaySet,
    WeatherSeries, SLOTS,
};
use crate::svdreg::CurveSample;

/// Temperature as annual and diurnal sinusoids plus a daily AR(1) anomaly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TempModel {
    pub mean: f64,
    pub annual_amplitude: f64,
    pub diurnal_amplitude: f64,
    pub anomaly_ar: f64,
    pub anomaly_sd: f64,
}

impl Default for TempModel {
    fn default() -> Self {
        Self {
            mean: 12.0,
            annual_amplitude: 8.0,
            diurnal_amplitude: 4.0,
            anomaly_ar: 0.8,
            anomaly_sd: 2.5,
        }
    }
}

fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2001, 1, 1).expect("valid date")
}

/// Scenario parameters. Only `seed` is mandatory in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(default = "default_start")]
    pub start: NaiveDate,
    #[serde(default = "defaults::years")]
    pub years: u32,
    /// MW.
    #[serde(default = "defaults::base_load")]
    pub base_load: f64,
    /// MW per year.
    #[serde(default = "defaults::trend_slope")]
    pub trend_slope: f64,
    /// MW, amplitude of a yearly cosine in the weekly trend.
    #[serde(default)]
    pub annual_amplitude: f64,
    /// MW per °C of weekly temperature below 15 °C.
    #[serde(default = "defaults::heating")]
    pub heating_gradient: f64,
    /// MW per °C of weekly temperature above 22 °C.
    #[serde(default = "defaults::cooling")]
    pub cooling_gradient: f64,
    /// MW per unit of weekly cloud cover.
    #[serde(default = "defaults::cloud_effect")]
    pub cloud_effect: f64,
    /// MW drop in summer-holiday weeks (half of it in the winter-holiday weeks).
    #[serde(default = "defaults::offset_drop")]
    pub offset_drop: f64,
    /// MW, scale of the day-type shapes.
    #[serde(default = "defaults::profile_amplitude")]
    pub profile_amplitude: f64,
    #[serde(default = "defaults::true_r")]
    pub true_r: usize,
    /// MW, standard deviation of the first factor score.
    #[serde(default = "defaults::factor_sd")]
    pub factor_sd: f64,
    /// Ratio `σⱼ₊₁/σⱼ`.
    #[serde(default = "defaults::factor_decay")]
    pub factor_decay: f64,
    /// AR(1) coefficient of every factor score.
    #[serde(default = "defaults::ar_coef")]
    pub ar_coef: f64,
    /// MW, half-hourly white noise.
    #[serde(default = "defaults::noise_sd")]
    pub noise_sd: f64,
    #[serde(default)]
    pub temp: TempModel,
    /// Insert fixed-date bank holidays (loaded with the Sunday shape).
    #[serde(default = "defaults::yes")]
    pub holidays: bool,
}

mod defaults {
    pub fn years() -> u32 {
        5
    }
    pub fn base_load() -> f64 {
        50_000.0
    }
    pub fn trend_slope() -> f64 {
        400.0
    }
    pub fn heating() -> f64 {
        1_200.0
    }
    pub fn cooling() -> f64 {
        500.0
    }
    pub fn cloud_effect() -> f64 {
        1_500.0
    }
    pub fn offset_drop() -> f64 {
        2_000.0
    }
    pub fn profile_amplitude() -> f64 {
        5_000.0
    }
    pub fn true_r() -> usize {
        3
    }
    pub fn factor_sd() -> f64 {
        1_500.0
    }
    pub fn factor_decay() -> f64 {
        0.8
    }
    pub fn ar_coef() -> f64 {
        0.85
    }
    pub fn noise_sd() -> f64 {
        100.0
    }
    pub fn yes() -> bool {
        true
    }
}

impl ScenarioConfig {
    /// Five-year reference scenario with rank-3 day-to-day dependence.
    pub fn reference(seed: u64) -> Self {
        Self {
            seed,
            start: default_start(),
            years: defaults::years(),
            base_load: defaults::base_load(),
            trend_slope: defaults::trend_slope(),
            annual_amplitude: 0.0,
            heating_gradient: defaults::heating(),
            cooling_gradient: defaults::cooling(),
            cloud_effect: defaults::cloud_effect(),
            offset_drop: defaults::offset_drop(),
            profile_amplitude: defaults::profile_amplitude(),
            true_r: defaults::true_r(),
            factor_sd: defaults::factor_sd(),
            factor_decay: defaults::factor_decay(),
            ar_coef: defaults::ar_coef(),
            noise_sd: defaults::noise_sd(),
            temp: TempModel::default(),
            holidays: true,
        }
    }

    pub fn end(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.start.year() + self.years as i32, self.start.month(), self.start.day())
            .unwrap_or(self.start + Duration::days(365 * self.years as i64))
            - Duration::days(1)
    }

    pub fn factor_sds(&self) -> Vec<f64> {
        (0..self.true_r)
            .map(|j| self.factor_sd * self.factor_decay.powi(j as i32))
            .collect()
    }

    /// Nonzero eigenvalues `(ρσⱼ²)²` of the consecutive-day cross-covariance.
    pub fn population_lambdas(&self) -> Vec<f64> {
        self.factor_sds()
            .iter()
            .map(|s| (self.ar_coef * s * s).powi(2))
            .collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.years == 0 {
            return Err("years must be at least 1".into());
        }
        if self.true_r == 0 || self.true_r > 20 {
            return Err("true_r must be in 1..=20".into());
        }
        if !(self.ar_coef.abs() < 1.0) {
            return Err("ar_coef must lie in (-1, 1)".into());
        }
        if !(self.noise_sd >= 0.0 && self.factor_sd >= 0.0) {
            return Err("standard deviations must be nonnegative".into());
        }
        Ok(())
    }
}

/// `count` loadings on `grid`, orthonormal in its inner product and with zero
/// arithmetic mean: Gram–Schmidt on Fourier harmonics after the vector `1/wᵢ`.
pub fn loadings(grid: &Grid, count: usize) -> Vec<Vec<f64>> {
    let w = grid.weights();
    let ip = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(w).map(|((x, y), wi)| x * y * wi).sum() };
    let mut basis: Vec<Vec<f64>> = vec![w.iter().map(|wi| 1.0 / wi).collect()];
    let norm0 = ip(&basis[0], &basis[0]).sqrt();
    basis[0].iter_mut().for_each(|v| *v /= norm0);
    let pts = grid.points();
    let (lo, span) = (pts[0], pts[pts.len() - 1] - pts[0]);
    let mut harmonic: usize = 0;
    while basis.len() < count + 1 {
        harmonic += 1;
        let k = harmonic.div_ceil(2) as f64;
        let mut v: Vec<f64> = pts
            .iter()
            .map(|p| {
                let x = 2.0 * PI * k * (p - lo) / span;
                if harmonic % 2 == 1 {
                    x.cos()
                } else {
                    x.sin()
                }
            })
            .collect();
        for b in &basis {
            let c = ip(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let n = ip(&v, &v).sqrt();
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis.split_off(1)
}

/// Zero-mean daily shape for each of the eight day types.
pub fn day_profiles(amplitude: f64) -> Vec<Vec<f64>> {
    let shape = |morning: f64, evening: f64, night: f64, lag: f64| -> Vec<f64> {
        let raw: Vec<f64> = (1..=SLOTS)
            .map(|k| {
                let u = k as f64 / SLOTS as f64;
                let bump = |c: f64, w: f64| (-((u - c - lag) / w).powi(2)).exp();
                morning * bump(0.40, 0.08) + evening * bump(0.79, 0.06) - night * bump(0.15, 0.12)
            })
            .collect();
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        raw.iter().map(|v| amplitude * (v - mean)).collect()
    };
    vec![
        shape(1.0, 0.9, 0.9, 0.01),
        shape(1.0, 0.9, 0.8, 0.0),
        shape(0.95, 0.8, 0.8, 0.0),
        shape(0.6, 0.8, 0.7, 0.04),
        shape(0.4, 0.8, 0.6, 0.06),
        shape(0.3, 0.6, 0.5, 0.06),
        shape(0.3, 0.5, 0.5, 0.07),
        shape(0.45, 1.0, 0.7, 0.05),
    ]
}

/// Everything used to produce a synthetic history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: ScenarioConfig,
    /// `(Monday, trend MW)` for every week touching the series.
    pub weekly_trend: Vec<(NaiveDate, f64)>,
    pub population_lambdas: Vec<f64>,
    pub loadings: Vec<Vec<f64>>,
    pub profiles: Vec<Vec<f64>>,
    /// Factor scores per day.
    pub scores: Vec<(NaiveDate, Vec<f64>)>,
    pub holidays: Vec<NaiveDate>,
}

impl GroundTruth {
    pub fn trend(&self, date: NaiveDate) -> Option<f64> {
        let m = week_monday(date);
        self.weekly_trend
            .binary_search_by_key(&m, |(d, _)| *d)
            .ok()
            .map(|i| self.weekly_trend[i].1)
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub load: HalfHourlySeries,
    pub weather: WeatherSeries,
    pub holidays: HolidaySet,
    pub truth: GroundTruth,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Weekly trend given weekly weather and the offset code.
fn weekly_trend(cfg: &ScenarioConfig, monday: NaiveDate, temp: f64, cloud: f64, offset: i32) -> f64 {
    let years = (monday - cfg.start).num_days() as f64 / 365.25;
    let doy = monday.ordinal() as f64;
    let offset_effect = match offset {
        3..=5 => -cfg.offset_drop,
        -3..=-2 => -0.5 * cfg.offset_drop,
        _ => 0.0,
    };
    cfg.base_load
        + cfg.trend_slope * years
        + cfg.annual_amplitude * (2.0 * PI * doy / 365.25).cos()
        + cfg.heating_gradient * (15.0 - temp).max(0.0)
        + cfg.cooling_gradient * (temp - 22.0).max(0.0)
        + cfg.cloud_effect * cloud
        + offset_effect
}

/// Generate a scenario. Output is a pure function of `cfg`.
pub fn generate(cfg: &ScenarioConfig) -> Result<Scenario, String> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let end = cfg.end();
    // weather spans whole weeks around the series so every week has a trend
    let w_start = week_monday(cfg.start);
    let w_end = week_monday(end) + Duration::days(6);
    let w_days = (w_end - w_start).num_days() as usize + 1;

    let tm = &cfg.temp;
    let mut temp = Vec::with_capacity(w_days * SLOTS);
    let mut cloud = Vec::with_capacity(w_days * SLOTS);
    let (mut anomaly, mut cloud_state) = (0.0, 0.0);
    let innov = (1.0 - tm.anomaly_ar * tm.anomaly_ar).max(0.0).sqrt();
    for k in 0..w_days {
        let day = w_start + Duration::days(k as i64);
        anomaly = tm.anomaly_ar * anomaly + innov * tm.anomaly_sd * normal(&mut rng);
        cloud_state = 0.7 * cloud_state + 0.7 * normal(&mut rng);
        let seasonal = tm.mean - tm.annual_amplitude * (2.0 * PI * (day.ordinal() as f64 - 20.0) / 365.25).cos();
        let c = 1.0 / (1.0 + (-cloud_state).exp());
        for s in 1..=SLOTS {
            let u = s as f64 / SLOTS as f64;
            let diurnal = -tm.diurnal_amplitude * (2.0 * PI * (u - 0.125)).cos();
            // clouds damp the diurnal swing
            temp.push(seasonal + anomaly + diurnal * (1.0 - 0.5 * c));
            cloud.push(c);
        }
    }

    let mut weekly = Vec::new();
    let mut monday = w_start;
    while monday <= w_end {
        let i0 = (monday - w_start).num_days() as usize * SLOTS;
        let n = 7 * SLOTS;
        let t = temp[i0..i0 + n].iter().sum::<f64>() / n as f64;
        let c = cloud[i0..i0 + n].iter().sum::<f64>() / n as f64;
        let mut offs: Vec<i32> = (0..7).map(|k| calendar_offset(monday + Duration::days(k))).collect();
        offs.sort_unstable();
        weekly.push((monday, weekly_trend(cfg, monday, t, c, offs[3])));
        monday += Duration::days(7);
    }

    let grid = day_grid();
    let loads = loadings(&grid, cfg.true_r);
    let profiles = day_profiles(cfg.profile_amplitude);
    let sds = cfg.factor_sds();
    let rho = cfg.ar_coef;
    let score_innov = (1.0 - rho * rho).sqrt();
    let holidays: Vec<NaiveDate> = if cfg.holidays {
        (cfg.start.year()..=end.year())
            .flat_map(fixed_holidays)
            .filter(|d| *d >= cfg.start && *d <= end)
            .collect()
    } else {
        Vec::new()
    };
    let holiday_set = HolidaySet::new(holidays.iter().copied());

    let n_days = (end - cfg.start).num_days() as usize + 1;
    let mut a: Vec<f64> = sds.iter().map(|s| s * normal(&mut rng)).collect();
    let mut values = Vec::with_capacity(n_days * SLOTS);
    let mut scores = Vec::with_capacity(n_days);
    for k in 0..n_days {
        let day = cfg.start + Duration::days(k as i64);
        if k > 0 {
            for (aj, sj) in a.iter_mut().zip(&sds) {
                *aj = rho * *aj + score_innov * sj * normal(&mut rng);
            }
        }
        let level = weekly[(week_monday(day) - w_start).num_days() as usize / 7].1;
        let dt = if holiday_set.contains(day) { 4 } else { day_type(day) as usize };
        for s in 0..SLOTS {
            let factor: f64 = a.iter().zip(&loads).map(|(aj, l)| aj * l[s]).sum();
            let noise = if cfg.noise_sd > 0.0 {
                cfg.noise_sd * normal(&mut rng)
            } else {
                0.0
            };
            values.push(level + profiles[dt][s] + factor + noise);
        }
        scores.push((day, a.clone()));
    }

    let off = (cfg.start - w_start).num_days() as usize * SLOTS;
    let weather = WeatherSeries::new(
        cfg.start,
        temp[off..off + n_days * SLOTS].to_vec(),
        cloud[off..off + n_days * SLOTS].to_vec(),
    )
    .map_err(|e| e.to_string())?;
    let load = HalfHourlySeries::new(cfg.start, values).map_err(|e| e.to_string())?;
    Ok(Scenario {
        load,
        weather,
        holidays: holiday_set,
        truth: GroundTruth {
            config: cfg.clone(),
            weekly_trend: weekly,
            population_lambdas: cfg.population_lambdas(),
            loadings: loads,
            profiles,
            scores,
            holidays,
        },
    })
}

/// Consecutive-day curve pairs drawn directly from the factor model, without calendar
/// or trend.
#[derive(Debug, Clone, PartialEq)]
pub struct PairScenario {
    pub grid: Arc<Grid>,
    pub loadings: Vec<Vec<f64>>,
    pub sds: Vec<f64>,
    pub ar_coef: f64,
    pub noise_sd: f64,
}

impl PairScenario {
    /// Day grid with the reference scenario's factor scales and noise, and `r` factors.
    pub fn reference(r: usize) -> Self {
        let base = ScenarioConfig {
            true_r: r,
            ..ScenarioConfig::reference(0)
        };
        Self::from_config(&base)
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        let grid = Arc::new(day_grid());
        Self {
            loadings: loadings(&grid, cfg.true_r),
            grid,
            sds: cfg.factor_sds(),
            ar_coef: cfg.ar_coef,
            noise_sd: cfg.noise_sd,
        }
    }

    pub fn population_lambdas(&self) -> Vec<f64> {
        self.sds
            .iter()
            .map(|s| (self.ar_coef * s * s).powi(2))
            .collect()
    }

    /// `n` pairs `(day t, day t + 1)` from one stationary chain of `n + 1` days.
    pub fn sample(&self, n: usize, seed: u64) -> CurveSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = self.ar_coef;
        let innov = (1.0 - rho * rho).sqrt();
        let mut a: Vec<f64> = self.sds.iter().map(|s| s * normal(&mut rng)).collect();
        let day = |a: &[f64], rng: &mut ChaCha8Rng| -> Curve {
            let v = (0..self.grid.len())
                .map(|s| {
                    let f: f64 = a.iter().zip(&self.loadings).map(|(aj, l)| aj * l[s]).sum();
                    f + self.noise_sd * normal(rng)
                })
                .collect();
            Curve::new(Arc::clone(&self.grid), v).expect("finite")
        };
        let mut prev = day(&a, &mut rng);
        let (mut xs, mut ys) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            for (aj, sj) in a.iter_mut().zip(&self.sds) {
                *aj = rho * *aj + innov * sj * normal(&mut rng);
            }
            let next = day(&a, &mut rng);
            xs.push(prev);
            ys.push(next.clone());
            prev = next;
        }
        CurveSample::new(xs, ys).expect("n ≥ 2 pairs on one grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::inner_product;
    use crate::svdreg::estimate_cross_cov;

    #[test]
    fn loadings_orthonormal_and_zero_mean() {
        let g = Arc::new(day_grid());
        let l = loadings(&g, 8);
        for (i, li) in l.iter().enumerate() {
            let ci = Curve::new(g.clone(), li.clone()).unwrap();
            assert!(li.iter().sum::<f64>().abs() < 1e-9);
            for (j, lj) in l.iter().enumerate() {
                let cj = Curve::new(g.clone(), lj.clone()).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((inner_product(&ci, &cj).unwrap() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn profiles_zero_mean() {
        for p in day_profiles(5000.0) {
            assert!(p.iter().sum::<f64>().abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let mut cfg = ScenarioConfig::reference(42);
        cfg.years = 1;
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.load, b.load);
        assert_eq!(a.weather, b.weather);
        assert_eq!(a.truth, b.truth);
        cfg.seed = 43;
        assert_ne!(generate(&cfg).unwrap().load, a.load);
    }

    #[test]
    fn noiseless_rank_one() {
        let mut cfg = ScenarioConfig::reference(1);
        cfg.true_r = 1;
        cfg.noise_sd = 0.0;
        let sample = PairScenario::from_config(&cfg).sample(250, 9);
        let cc = estimate_cross_cov(&sample, 5).unwrap();
        assert!(cc.lambdas[1] / cc.lambdas[0] < 1e-6);
    }

    #[test]
    fn true_trend_recovers_residuals() {
        let mut cfg = ScenarioConfig::reference(3);
        cfg.years = 1;
        cfg.noise_sd = 0.0;
        let s = generate(&cfg).unwrap();
        for (day, a) in s.truth.scores.iter().step_by(17) {
            let trend = s.truth.trend(*day).unwrap();
            let dt = if s.holidays.contains(*day) { 4 } else { day_type(*day) as usize };
            for (k, v) in s.load.day(*day).unwrap().iter().enumerate() {
                let factor: f64 = a.iter().zip(&s.truth.loadings).map(|(x, l)| x * l[k]).sum();
                assert!((v - trend - s.truth.profiles[dt][k] - factor).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn flat_trend_gives_flat_weeks() {
        let mut cfg = ScenarioConfig::reference(5);
        cfg.years = 1;
        cfg.trend_slope = 0.0;
        cfg.heating_gradient = 0.0;
        cfg.cooling_gradient = 0.0;
        cfg.cloud_effect = 0.0;
        cfg.offset_drop = 0.0;
        cfg.factor_sd = 0.0;
        cfg.holidays = false;
        let s = generate(&cfg).unwrap();
        let weeks = crate::pipeline::weekly_loads(&s.load);
        for v in weeks.values() {
            assert!((v - cfg.base_load).abs() < 5.0 * cfg.noise_sd / (336f64).sqrt());
        }
    }

    #[test]
    fn two_year_length() {
        let mut cfg = ScenarioConfig::reference(0);
        cfg.years = 2;
        let s = generate(&cfg).unwrap();
        assert_eq!(s.load.n_days(), 730);
        assert_eq!(s.load.end(), NaiveDate::from_ymd_opt(2002, 12, 31).unwrap());
    }
}
