mod common;

use std::collections::BTreeMap;

use chrono::Duration;
use loadcurve::cli::store::{ModelStore, TrainingWindows, FORMAT_VERSION};
use loadcurve::datagen::{generate, Scenario, ScenarioConfig};
use loadcurve::metrics::evaluate_by_kind;
use loadcurve::pipeline::engine::fit_history;
use loadcurve::pipeline::{
    audit_windows, classify_day, forecast_day, week_monday, DayInputs, ForecastKind, Forecaster,
    PipelineConfig,
};

use common::date;

const KINDS: [ForecastKind; 3] = [ForecastKind::Hybrid, ForecastKind::Oracle, ForecastKind::Baseline];

fn scenario(seed: u64) -> Scenario {
    let cfg = ScenarioConfig {
        years: 3,
        ..ScenarioConfig::reference(seed)
    };
    generate(&cfg).unwrap()
}

#[test]
fn components_add_up_to_prediction() {
    let s = scenario(3);
    let mut fc = Forecaster::new(&s.load, &s.weather, &s.holidays, PipelineConfig::default()).unwrap();
    let results = fc.forecast_range(date(2003, 3, 3), date(2003, 3, 16), 2, &KINDS).unwrap();
    assert!(!results.is_empty());
    for r in &results {
        for i in 0..48 {
            let sum = r.trend_component
                + r.mean_component.values()[i]
                + r.correction_component.values()[i];
            assert!((r.predicted.values()[i] - sum).abs() < 1e-9 * sum.abs().max(1.0));
        }
        if r.kind == ForecastKind::Baseline {
            assert!(r.correction_component.values().iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn oracle_beats_hybrid_beats_baseline() {
    let s = scenario(5);
    let mut fc = Forecaster::new(&s.load, &s.weather, &s.holidays, PipelineConfig::default()).unwrap();
    let results = fc.forecast_range(date(2003, 2, 3), date(2003, 6, 29), 1, &KINDS).unwrap();
    assert!(audit_windows(&results).is_empty());
    let actuals: BTreeMap<_, _> = s.load.dates().map(|d| (d, s.load.day(d).unwrap().to_vec())).collect();
    let reports = evaluate_by_kind(&results, &actuals).unwrap();
    let m = |k| reports[&(k, 1)].overall.mape;
    let (o, h, b) = (m(ForecastKind::Oracle), m(ForecastKind::Hybrid), m(ForecastKind::Baseline));
    assert!(o <= h, "oracle {o} hybrid {h}");
    assert!(h < b, "hybrid {h} baseline {b}");
}

#[test]
fn one_step_chain_equals_direct_forecast() {
    let s = scenario(11);
    let cfg = PipelineConfig {
        n_min: 8,
        ..PipelineConfig::default()
    };
    let cutoff = date(2003, 5, 5);
    let (ts, registry) = fit_history(&s.load, &s.weather, &s.holidays, &cfg, cutoff, 2).unwrap();
    let mut fc = Forecaster::new(&s.load, &s.weather, &s.holidays, cfg.clone())
        .unwrap()
        .with_models(ts.gam.clone(), registry.clone())
        .unwrap();
    let mut checked = 0;
    for k in 0..28 {
        let day = cutoff + Duration::days(k);
        if s.holidays.contains(day) {
            continue;
        }
        let chain = fc.forecast_chain(day, 1, &[ForecastKind::Hybrid]).unwrap();
        let Some(model) = registry.get(classify_day(day - Duration::days(1)), classify_day(day)) else {
            assert!(chain[0].fallback);
            continue;
        };
        let trend = ts.trend[&week_monday(day)];
        let prev = ts.residuals[&(day - Duration::days(1))].values().to_vec();
        let today: Vec<f64> = s.load.day(day).unwrap().iter().map(|v| v - trend).collect();
        let direct = forecast_day(
            day,
            trend,
            model,
            &cfg.regressor,
            &DayInputs {
                prev_residual: &prev,
                temp: s.weather.day_temp(day),
                observed_today: Some(&today),
            },
        )
        .unwrap();
        assert_eq!(chain[0].predicted.values(), direct.predicted.values());
        checked += 1;
    }
    assert!(checked >= 10, "{checked} days compared");
}

#[test]
fn stored_models_reproduce_forecasts_bit_for_bit() {
    let s = scenario(2);
    let cfg = PipelineConfig::default();
    let cutoff = date(2003, 9, 1);
    let (ts, registry) = fit_history(&s.load, &s.weather, &s.holidays, &cfg, cutoff, 3).unwrap();
    let store = ModelStore {
        format_version: FORMAT_VERSION,
        pipeline: cfg.clone(),
        origin: date(2001, 1, 1),
        windows: TrainingWindows {
            gam_first_week: ts.first_week,
            gam_last_day: ts.train_end(),
            curve_cutoff: registry.cutoff,
        },
        gam: ts.gam.clone(),
        registry: registry.clone(),
    };
    let text = store.to_text().unwrap();
    let back = ModelStore::from_text(&text).unwrap();
    assert_eq!(back, store);

    let run = |gam, reg| {
        let mut fc = Forecaster::new(&s.load, &s.weather, &s.holidays, cfg.clone())
            .unwrap()
            .with_models(gam, reg)
            .unwrap();
        fc.forecast_range(cutoff, cutoff + Duration::days(20), 3, &KINDS).unwrap()
    };
    let a = run(ts.gam, registry);
    let b = run(back.gam, back.registry);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        let bits = |v: &[f64]| v.iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(x.predicted.values()), bits(y.predicted.values()));
    }
    assert!(audit_windows(&a).is_empty());
}

#[test]
fn worker_count_does_not_change_models() {
    let s = scenario(4);
    let cfg = PipelineConfig::default();
    let cutoff = date(2003, 1, 6);
    let (_, one) = fit_history(&s.load, &s.weather, &s.holidays, &cfg, cutoff, 1).unwrap();
    let (_, four) = fit_history(&s.load, &s.weather, &s.holidays, &cfg, cutoff, 4).unwrap();
    assert_eq!(one, four);
    assert!(one.models.iter().all(|m| m.last_day < cutoff));
}
