//! Training samples of consecutive-day curve pairs for one class pair.

use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::calendar::{classify_day, DayClass, HolidaySet};
use super::series::{DayGrids, WeatherSeries, HALF, SLOTS};
use super::{PipelineError, RegressorSpec};
use crate::curves::{standardize_and_join, Curve, Grid, JoinStats};
use crate::svdreg::CurveSample;

/// Which block of the target day a curve regression predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Full,
    /// Slots 1–24, regressed on the previous day's slots 25–48.
    Morning,
    /// Slots 25–48, regressed on the same day's slots 1–24.
    Evening,
}

impl Part {
    pub fn for_spec(spec: &RegressorSpec) -> &'static [Part] {
        if spec.half_day() {
            &[Part::Morning, Part::Evening]
        } else {
            &[Part::Full]
        }
    }

    pub fn response_range(self) -> Range<usize> {
        match self {
            Part::Full => 0..SLOTS,
            Part::Morning => 0..HALF,
            Part::Evening => HALF..SLOTS,
        }
    }

    pub fn response_grid(self) -> &'static Arc<Grid> {
        let g = DayGrids::get();
        match self {
            Part::Full => &g.full,
            Part::Morning => &g.morning,
            Part::Evening => &g.evening,
        }
    }

    fn load_grid(self) -> &'static Arc<Grid> {
        let g = DayGrids::get();
        match self {
            Part::Full => &g.full,
            Part::Morning => &g.evening,
            Part::Evening => &g.morning,
        }
    }

    fn joined_grid(self) -> &'static Arc<Grid> {
        let g = DayGrids::get();
        match self {
            Part::Full => &g.full_full,
            Part::Morning => &g.evening_morning,
            Part::Evening => &g.morning_evening,
        }
    }

    /// The load block feeding this part's regressor: the previous day's full curve or
    /// evening, or the target day's own morning.
    pub fn load_piece<'a>(self, prev_day: &'a [f64], same_day: &'a [f64]) -> &'a [f64] {
        match self {
            Part::Full => prev_day,
            Part::Morning => &prev_day[HALF..SLOTS],
            Part::Evening => &same_day[..HALF],
        }
    }

    /// Response block of a full-day curve.
    pub fn response(self, day: &Curve) -> Result<Curve, PipelineError> {
        Ok(Curve::new(
            Arc::clone(self.response_grid()),
            day.values()[self.response_range()].to_vec(),
        )?)
    }

    /// Regressor curve from a load block and, for temperature variants, the target day's
    /// temperature over the response block.
    pub fn regressor(
        self,
        load_piece: &[f64],
        temp_day: Option<&[f64]>,
        stats: Option<&JoinStats>,
    ) -> Result<Curve, PipelineError> {
        let load = Curve::new(Arc::clone(self.load_grid()), load_piece.to_vec())?;
        match (temp_day, stats) {
            (Some(temp), Some(stats)) => {
                let temp = Curve::new(
                    Arc::clone(self.response_grid()),
                    temp[self.response_range()].to_vec(),
                )?;
                Ok(standardize_and_join(&load, &temp, stats, self.joined_grid())?)
            }
            _ => Ok(load),
        }
    }
}

/// One part's regression sample with its standardisation statistics.
#[derive(Debug, Clone)]
pub struct PartSample {
    pub part: Part,
    pub sample: CurveSample,
    pub stats: Option<JoinStats>,
}

#[derive(Debug, Clone)]
pub struct TrainingPairs {
    pub prev: DayClass,
    pub target: DayClass,
    /// Response days, ascending.
    pub dates: Vec<NaiveDate>,
    pub parts: Vec<PartSample>,
}

/// Response days `i < cutoff` grouped by `(class(i − 1), class(i))`, skipping pairs that
/// touch a holiday or a day without a residual.
pub fn realized_pairs(
    residuals: &BTreeMap<NaiveDate, Curve>,
    holidays: &HolidaySet,
    cutoff: NaiveDate,
) -> BTreeMap<(DayClass, DayClass), Vec<NaiveDate>> {
    let mut out: BTreeMap<(DayClass, DayClass), Vec<NaiveDate>> = BTreeMap::new();
    for &day in residuals.range(..cutoff).map(|(d, _)| d) {
        let prev = day - Duration::days(1);
        if !residuals.contains_key(&prev) || holidays.contains(day) || holidays.contains(prev) {
            continue;
        }
        out.entry((classify_day(prev), classify_day(day)))
            .or_default()
            .push(day);
    }
    out
}

/// Assemble the per-part samples for the given response days.
pub fn pairs_for_dates(
    residuals: &BTreeMap<NaiveDate, Curve>,
    weather: Option<&WeatherSeries>,
    spec: &RegressorSpec,
    prev: DayClass,
    target: DayClass,
    dates: Vec<NaiveDate>,
) -> Result<TrainingPairs, PipelineError> {
    let temps: Vec<&[f64]> = if spec.uses_temperature() {
        let w = weather.ok_or_else(|| PipelineError::MissingWeather(dates[0]))?;
        dates
            .iter()
            .map(|d| w.day_temp(*d).ok_or(PipelineError::MissingWeather(*d)))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };
    let mut parts = Vec::new();
    for &part in Part::for_spec(spec) {
        let mut loads = Vec::with_capacity(dates.len());
        let mut responses = Vec::with_capacity(dates.len());
        for day in &dates {
            let y = &residuals[day];
            let x = &residuals[&(*day - Duration::days(1))];
            loads.push(part.load_piece(x.values(), y.values()));
            responses.push(part.response(y)?);
        }
        let stats = if spec.uses_temperature() {
            let load_curves: Vec<Curve> = loads
                .iter()
                .map(|l| Curve::new(Arc::clone(part.load_grid()), l.to_vec()))
                .collect::<Result<_, _>>()?;
            let temp_curves: Vec<Curve> = temps
                .iter()
                .map(|t| {
                    Curve::new(
                        Arc::clone(part.response_grid()),
                        t[part.response_range()].to_vec(),
                    )
                })
                .collect::<Result<_, _>>()?;
            Some(JoinStats::from_training(&load_curves, &temp_curves)?)
        } else {
            None
        };
        let regressors = loads
            .iter()
            .enumerate()
            .map(|(i, l)| part.regressor(l, temps.get(i).copied(), stats.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        parts.push(PartSample {
            part,
            sample: CurveSample::new(regressors, responses)?,
            stats,
        });
    }
    Ok(TrainingPairs {
        prev,
        target,
        dates,
        parts,
    })
}

/// Training sample for `prev → target` from response days strictly before `cutoff`.
#[allow(clippy::too_many_arguments)]
pub fn build_training_pairs(
    residuals: &BTreeMap<NaiveDate, Curve>,
    weather: Option<&WeatherSeries>,
    holidays: &HolidaySet,
    prev: DayClass,
    target: DayClass,
    spec: &RegressorSpec,
    cutoff: NaiveDate,
    n_min: usize,
) -> Result<TrainingPairs, PipelineError> {
    let dates = realized_pairs(residuals, holidays, cutoff)
        .remove(&(prev, target))
        .unwrap_or_default();
    if dates.len() < n_min.max(2) {
        return Err(PipelineError::InsufficientData {
            prev,
            target,
            n: dates.len(),
            n_min,
        });
    }
    pairs_for_dates(residuals, weather, spec, prev, target, dates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Variant;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn residuals(from: NaiveDate, days: i64) -> BTreeMap<NaiveDate, Curve> {
        (0..days)
            .map(|k| {
                let day = from + Duration::days(k);
                let v: Vec<f64> = (0..SLOTS).map(|s| (k * 7 + s as i64) as f64 % 13.0).collect();
                (day, DayGrids::day_curve(&v).unwrap())
            })
            .collect()
    }

    #[test]
    fn thirteen_aprils_of_tue_to_wed() {
        let res = residuals(d(1996, 1, 1), 13 * 366);
        let c = |date| classify_day(date);
        let (prev, target) = (c(d(2009, 4, 7)), c(d(2009, 4, 8)));
        let pairs = build_training_pairs(
            &res,
            None,
            &HolidaySet::default(),
            prev,
            target,
            &RegressorSpec::new(Variant::H1),
            d(2009, 1, 1),
            15,
        )
        .unwrap();
        // Tue–Thu → Tue–Thu in April covers Tue→Wed and Wed→Thu
        assert!(pairs.dates.len() > 100);
        let cutoff = d(2009, 1, 1);
        assert!(pairs.dates.iter().all(|x| *x < cutoff));
    }

    #[test]
    fn holidays_excluded() {
        let res = residuals(d(2001, 1, 1), 400);
        let hol = HolidaySet::new([d(2001, 5, 1)]);
        let all = realized_pairs(&res, &HolidaySet::default(), d(2002, 1, 1));
        let some = realized_pairs(&res, &hol, d(2002, 1, 1));
        let count = |m: &BTreeMap<_, Vec<NaiveDate>>| m.values().map(Vec::len).sum::<usize>();
        assert_eq!(count(&all) - count(&some), 2);
        assert!(some.values().flatten().all(|x| *x != d(2001, 5, 1) && *x != d(2001, 5, 2)));
    }

    #[test]
    fn keyed_by_both_classes() {
        let res = residuals(d(2001, 1, 1), 200);
        let pairs = realized_pairs(&res, &HolidaySet::default(), d(2002, 1, 1));
        // Tuesday 2001-05-01 follows Monday 2001-04-30: different segments
        let key = (classify_day(d(2001, 4, 30)), classify_day(d(2001, 5, 1)));
        assert_eq!(pairs[&key], vec![d(2001, 5, 1)]);
    }

    #[test]
    fn insufficient_data() {
        let res = residuals(d(2001, 1, 1), 30);
        let r = build_training_pairs(
            &res,
            None,
            &HolidaySet::default(),
            classify_day(d(2001, 1, 8)),
            classify_day(d(2001, 1, 9)),
            &RegressorSpec::new(Variant::H1),
            d(2002, 1, 1),
            15,
        );
        assert!(matches!(r, Err(PipelineError::InsufficientData { n: 5, .. })));
    }

    #[test]
    fn half_day_parts() {
        let res = residuals(d(2001, 1, 1), 400);
        let temp = (0..400 * SLOTS).map(|i| (i as f64 * 0.01).sin() * 5.0 + 10.0).collect();
        let w = WeatherSeries::new(d(2001, 1, 1), temp, vec![0.5; 400 * SLOTS]).unwrap();
        let spec = RegressorSpec::new(Variant::H4);
        let key = (classify_day(d(2001, 3, 6)), classify_day(d(2001, 3, 7)));
        let p = build_training_pairs(
            &res,
            Some(&w),
            &HolidaySet::default(),
            key.0,
            key.1,
            &spec,
            d(2002, 1, 1),
            2,
        )
        .unwrap();
        assert_eq!(p.parts.len(), 2);
        assert_eq!(p.parts[0].sample.regressor_grid().len(), 48);
        assert_eq!(p.parts[0].sample.response_grid().len(), 24);
        // morning regressor starts with the previous day's slot 25
        let day = p.dates[0];
        let prev = &res[&(day - Duration::days(1))];
        let x0 = p.parts[0].sample.regressors()[0].values()[0];
        let stats = p.parts[0].stats.unwrap();
        assert!((x0 - (prev.values()[24] - stats.load.mean) / stats.load.sd).abs() < 1e-12);
    }
}
