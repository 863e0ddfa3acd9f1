//! Day classification and calendar-derived covariates.

use std::collections::BTreeSet;
use std::fmt;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

/// Expert day type, indices 0–7:
/// Mon, Tue–Thu, Fri, Sat, Sun (rest of year), Sun (Jun–Jul), Sun (Aug), Sun (Dec).
pub const DAY_TYPE_LABELS: [&str; 8] = [
    "Mon",
    "Tue-Thu",
    "Fri",
    "Sat",
    "Sun (rest)",
    "Sun (Jun-Jul)",
    "Sun (Aug)",
    "Sun (Dec)",
];

/// Seasonal segments 1–9.
pub const SEGMENT_LABELS: [&str; 9] = [
    "Jan-Feb", "Mar", "Apr", "May", "Jun-Jul", "Aug-Sep", "Oct", "Nov", "Dec",
];

/// `(day type, seasonal segment)` key selecting which curve-regression model applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DayClass {
    pub day_type: u8,
    pub segment: u8,
}

impl fmt::Display for DayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.day_type, self.segment)
    }
}

pub fn day_type(date: NaiveDate) -> u8 {
    match date.weekday() {
        Weekday::Mon => 0,
        Weekday::Tue | Weekday::Wed | Weekday::Thu => 1,
        Weekday::Fri => 2,
        Weekday::Sat => 3,
        Weekday::Sun => match date.month() {
            6 | 7 => 5,
            8 => 6,
            12 => 7,
            _ => 4,
        },
    }
}

pub fn segment(date: NaiveDate) -> u8 {
    match date.month() {
        1 | 2 => 1,
        3 => 2,
        4 => 3,
        5 => 4,
        6 | 7 => 5,
        8 | 9 => 6,
        10 => 7,
        11 => 8,
        _ => 9,
    }
}

pub fn classify_day(date: NaiveDate) -> DayClass {
    DayClass {
        day_type: day_type(date),
        segment: segment(date),
    }
}

/// Bank holidays, excluded from training pairs and from evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HolidaySet(BTreeSet<NaiveDate>);

impl HolidaySet {
    pub fn new(dates: impl IntoIterator<Item = NaiveDate>) -> Self {
        Self(dates.into_iter().collect())
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.0.contains(&date)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NaiveDate> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Fixed-date holidays used by the synthetic calendar.
pub fn fixed_holidays(year: i32) -> Vec<NaiveDate> {
    [(1, 1), (5, 1), (5, 8), (7, 14), (8, 15), (11, 1), (11, 11), (12, 25)]
        .iter()
        .filter_map(|&(m, d)| NaiveDate::from_ymd_opt(year, m, d))
        .collect()
}

/// Seasonal offset code in `{−3, …, 7}` derived from the calendar alone:
/// winter holiday periods −3…0, spring 1, summer and summer holidays 2–6, autumn 7.
pub fn calendar_offset(date: NaiveDate) -> i32 {
    let (m, d) = (date.month(), date.day());
    match (m, d) {
        (12, 20..=31) => -3,
        (1, 1..=5) => -2,
        (2, 10..=29) | (3, 1..=5) => -1,
        (11, _) | (12, _) | (1, _) | (2, _) | (3, 1..=20) => 0,
        (3, _) | (4, _) | (5, _) | (6, 1..=20) => 1,
        (6, _) | (7, 1..=5) => 2,
        (7, _) => 3,
        (8, 1..=15) => 4,
        (8, _) => 5,
        (9, 1..=22) => 6,
        _ => 7,
    }
}

/// Monday of the week containing `date`.
pub fn week_monday(date: NaiveDate) -> NaiveDate {
    date - chrono::Duration::days(date.weekday().num_days_from_monday() as i64)
}

/// ISO week-of-year, 1–53.
pub fn week_of_year(date: NaiveDate) -> u32 {
    date.iso_week().week()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    #[test]
    fn table_examples() {
        // 2 April 2009 is a Thursday
        assert_eq!(classify_day(d(2009, 4, 2)), DayClass { day_type: 1, segment: 3 });
        assert_eq!(day_type(d(2009, 8, 16)), 6);
        assert_eq!(classify_day(d(2024, 1, 1)), DayClass { day_type: 0, segment: 1 });
        assert_eq!(day_type(d(2009, 12, 6)), 7);
        assert_eq!(day_type(d(2009, 6, 7)), 5);
        assert_eq!(day_type(d(2009, 9, 6)), 4);
    }

    #[test]
    fn offsets_cover_code_range() {
        let mut seen = BTreeSet::new();
        let mut day = d(2001, 1, 1);
        while day.year() == 2001 {
            let o = calendar_offset(day);
            assert!((-3..=7).contains(&o));
            seen.insert(o);
            day = day.succ_opt().unwrap();
        }
        assert_eq!(seen.len(), 11);
    }

    #[test]
    fn week_helpers() {
        assert_eq!(week_monday(d(2009, 4, 2)), d(2009, 3, 30));
        assert_eq!(week_of_year(d(2009, 12, 28)), 53);
        assert_eq!(week_of_year(d(2010, 1, 4)), 1);
    }
}
