use std::collections::BTreeSet;

use chrono::NaiveDate;

use super::Column;
use crate::series::Timestamp;

/// A named event on a set of calendar dates, with optional indicators for
/// the days before and after.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub name: String,
    pub dates: BTreeSet<NaiveDate>,
    pub pre_days: u32,
    pub post_days: u32,
}

impl EventSpec {
    pub fn new(name: &str, dates: impl IntoIterator<Item = NaiveDate>, pre_days: u32, post_days: u32) -> Self {
        Self {
            name: name.to_string(),
            dates: dates.into_iter().collect(),
            pre_days,
            post_days,
        }
    }

    /// Column prefix: lower snake case of the name.
    pub fn column_prefix(&self) -> String {
        sanitize_name(&self.name)
    }

    /// `(column name, day offset)` pairs; the column is 1 when the date
    /// shifted by the offset is an event date.
    pub fn offsets(&self) -> Vec<(String, i64)> {
        let prefix = self.column_prefix();
        let mut out = vec![(prefix.clone(), 0)];
        out.extend((1..=self.pre_days).map(|j| (format!("{prefix}_m{j}"), i64::from(j))));
        out.extend((1..=self.post_days).map(|j| (format!("{prefix}_p{j}"), -i64::from(j))));
        out
    }
}

/// Lower-cases, drops apostrophes and maps other non-alphanumerics to `_`.
pub fn sanitize_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for c in name.chars().filter(|c| *c != '\'') {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

#[inline]
pub(crate) fn event_value(dates: &BTreeSet<NaiveDate>, ts: Timestamp, offset_days: i64) -> f64 {
    let shifted = ts.date().checked_add_signed(chrono::Duration::days(offset_days));
    match shifted {
        Some(d) if dates.contains(&d) => 1.0,
        _ => 0.0,
    }
}

/// Indicator columns `{name}`, `{name}_m{j}` (j days before) and
/// `{name}_p{j}` (j days after). Matching is by calendar date, so every
/// point of a sub-daily grid within the day is flagged.
pub fn event_indicators(grid: &[Timestamp], specs: &[EventSpec]) -> Vec<Column> {
    specs
        .iter()
        .flat_map(|spec| {
            spec.offsets().into_iter().map(move |(name, off)| {
                Column::new(name, grid.iter().map(|&t| event_value(&spec.dates, t, off)).collect())
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{parse_timestamp, Frequency};

    #[test]
    fn christmas_with_neighbors() {
        let xmas = EventSpec::new("Christmas", [NaiveDate::from_ymd_opt(2015, 12, 25).unwrap()], 1, 1);
        let grid: Vec<_> = ["2015-12-24", "2015-12-25", "2015-12-26", "2015-12-27"]
            .iter()
            .map(|s| parse_timestamp(s).unwrap())
            .collect();
        let cols = event_indicators(&grid, &[xmas]);
        let names: Vec<_> = cols.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["christmas", "christmas_m1", "christmas_p1"]);
        assert_eq!(cols[0].values, [0.0, 1.0, 0.0, 0.0]);
        assert_eq!(cols[1].values, [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(cols[2].values, [0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn event_outside_grid_keeps_zero_columns() {
        let e = EventSpec::new("Launch", [NaiveDate::from_ymd_opt(2030, 1, 1).unwrap()], 0, 2);
        let grid = [parse_timestamp("2015-12-24").unwrap()];
        let cols = event_indicators(&grid, &[e]);
        assert_eq!(cols.len(), 3);
        assert!(cols.iter().all(|c| c.values == [0.0]));
    }

    #[test]
    fn hourly_grid_flags_whole_day() {
        let e = EventSpec::new("Day", [NaiveDate::from_ymd_opt(2020, 3, 2).unwrap()], 0, 0);
        let start = parse_timestamp("2020-03-01").unwrap();
        let grid: Vec<_> = (0..72).map(|k| Frequency::hourly().grid_point(start, k)).collect();
        let cols = event_indicators(&grid, &[e]);
        assert_eq!(cols[0].values.iter().sum::<f64>(), 24.0);
        assert!(cols[0].values[24..48].iter().all(|v| *v == 1.0));
    }

    #[test]
    fn names_are_sanitized() {
        assert_eq!(sanitize_name("New Year's Day"), "new_years_day");
        assert_eq!(sanitize_name("Martin Luther King Jr. Day"), "martin_luther_king_jr_day");
    }
}
