mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::Duration;
use loadcurve::curves::{inner_product, Curve, Grid, JoinStats};
use loadcurve::metrics::{evaluate, mape, rmse};
use loadcurve::pipeline::{DayGrids, ForecastKind, ForecastResult};
use proptest::prelude::*;

use common::date;

fn grid_and_values(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
    (2..max).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..1.0, n),
            prop::collection::vec(prop::collection::vec(-100.0f64..100.0, n), 3),
        )
    })
}

fn grid_from_gaps(gaps: &[f64]) -> Arc<Grid> {
    let mut x = 0.0;
    let points = gaps
        .iter()
        .map(|g| {
            x += g;
            x
        })
        .collect();
    Arc::new(Grid::trapezoid(points).unwrap())
}

proptest! {
    #[test]
    fn inner_product_symmetric_and_bilinear(
        (gaps, vals) in grid_and_values(30),
        a in -5.0f64..5.0,
        b in -5.0f64..5.0,
    ) {
        let g = grid_from_gaps(&gaps);
        let c: Vec<Curve> = vals.into_iter().map(|v| Curve::new(Arc::clone(&g), v).unwrap()).collect();
        let (f, h, k) = (&c[0], &c[1], &c[2]);
        let fh = inner_product(f, h).unwrap();
        let hf = inner_product(h, f).unwrap();
        prop_assert!((fh - hf).abs() <= 1e-14 * (f.norm() * h.norm() + 1.0));
        let combo = f.scale(a).axpy(b, h).unwrap();
        let lhs = inner_product(&combo, k).unwrap();
        let rhs = a * inner_product(f, k).unwrap() + b * inner_product(h, k).unwrap();
        let scale = (a.abs() * f.norm() + b.abs() * h.norm()) * k.norm() + 1.0;
        prop_assert!((lhs - rhs).abs() <= 1e-11 * scale);
        prop_assert!(inner_product(f, f).unwrap() >= 0.0);
    }

    #[test]
    fn standardized_segments_have_zero_mean_unit_sd(
        loads in prop::collection::vec(prop::collection::vec(1000.0f64..60000.0, 24), 3..20),
        temps in prop::collection::vec(prop::collection::vec(-10.0f64..35.0, 24), 3..20),
    ) {
        let n = loads.len().min(temps.len());
        let g = &DayGrids::get().morning;
        let to_curves = |v: &[Vec<f64>]| -> Vec<Curve> {
            v[..n].iter().map(|x| Curve::new(Arc::clone(g), x.clone()).unwrap()).collect()
        };
        let (l, t) = (to_curves(&loads), to_curves(&temps));
        let stats = JoinStats::from_training(&l, &t).unwrap();
        for (seg, s) in [(&l, stats.load), (&t, stats.temp)] {
            let z: Vec<f64> = seg.iter().flat_map(|c| s.apply(c).into_values()).collect();
            let m = z.iter().sum::<f64>() / z.len() as f64;
            let v = z.iter().map(|x| (x - m).powi(2)).sum::<f64>() / z.len() as f64;
            prop_assert!(m.abs() < 1e-9);
            prop_assert!((v - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mape_scale_invariant_rmse_linear(
        v in prop::collection::vec((1.0f64..1e5, 1.0f64..1e5), 1..60),
        c in 1e-3f64..1e3,
    ) {
        let (p, t): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        let ps: Vec<f64> = p.iter().map(|x| c * x).collect();
        let ts: Vec<f64> = t.iter().map(|x| c * x).collect();
        let m = mape(&p, &t).unwrap();
        let r = rmse(&p, &t).unwrap();
        prop_assert!((mape(&ps, &ts).unwrap() - m).abs() <= 1e-12 * m.max(1.0));
        prop_assert!((rmse(&ps, &ts).unwrap() - c * r).abs() <= 1e-9 * (c * r).max(1.0));
        let neg: Vec<f64> = ps.iter().map(|x| -x).collect();
        let negt: Vec<f64> = ts.iter().map(|x| -x).collect();
        prop_assert!((rmse(&neg, &negt).unwrap() - c * r).abs() <= 1e-9 * (c * r).max(1.0));
    }
}

fn forecast(day: i64, bias: f64) -> (ForecastResult, Vec<f64>) {
    let date = date(2004, 1, 1) + Duration::days(day);
    let truth: Vec<f64> = (0..48).map(|s| 40_000.0 + 100.0 * s as f64 + 37.0 * day as f64).collect();
    let pred: Vec<f64> = truth.iter().map(|v| v + bias * (1.0 + (v / 7.0).sin())).collect();
    let g = Arc::clone(&DayGrids::get().full);
    let r = ForecastResult::assemble(
        date,
        ForecastKind::Hybrid,
        0.0,
        Curve::new(Arc::clone(&g), pred).unwrap(),
        Curve::zeros(g),
    )
    .unwrap();
    (r, truth)
}

proptest! {
    #[test]
    fn evaluate_is_permutation_invariant(
        days in prop::collection::btree_map(0i64..700, -2000.0f64..2000.0, 1..40),
        seed in any::<u64>(),
    ) {
        let mut items: Vec<(ForecastResult, Vec<f64>)> =
            days.iter().map(|(d, b)| forecast(*d, *b)).collect();
        let actuals: BTreeMap<_, _> = items.iter().map(|(r, t)| (r.date, t.clone())).collect();
        let base: Vec<ForecastResult> = items.iter().map(|(r, _)| r.clone()).collect();
        let a = evaluate(&base, &actuals).unwrap();
        // deterministic shuffle driven by the seed
        let mut s = seed;
        for i in (1..items.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            items.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<ForecastResult> = items.into_iter().map(|(r, _)| r).collect();
        let b = evaluate(&shuffled, &actuals).unwrap();
        prop_assert_eq!(&a.per_day, &b.per_day);
        prop_assert!((a.overall.mape - b.overall.mape).abs() <= 1e-12 * a.overall.mape.max(1e-12));
        prop_assert!((a.overall.rmse - b.overall.rmse).abs() <= 1e-9 * a.overall.rmse.max(1.0));
        // month rows partition the days and re-aggregate to the overall mean
        let days_total: usize = a.by_month.iter().map(|g| g.days).sum();
        prop_assert_eq!(days_total, a.overall.days);
        let weighted: f64 = a.by_month.iter().map(|g| g.mape * g.days as f64).sum::<f64>()
            / a.overall.days as f64;
        prop_assert!((weighted - a.overall.mape).abs() <= 1e-12);
    }
}
