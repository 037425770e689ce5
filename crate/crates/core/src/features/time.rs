use chrono::{Datelike, NaiveDate, Timelike, Weekday};

use super::Column;
use crate::series::Timestamp;

/// Calendar features derived from a timestamp alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeFeature {
    /// Hour-of-day fraction in `[0, 1)`.
    Tod,
    /// Day of week, 0 = Monday.
    Dow,
    IsWeekend,
    /// Day of month, 1-based.
    Dom,
    /// Yearly seasonal position `(doy - 1 + tod) / days_in_year`.
    DoyFrac,
    MonthStart,
    MonthEnd,
    QuarterStart,
    QuarterEnd,
    /// Hour of day as an integer category.
    Hour,
    /// Calendar month, 1-based.
    Month,
}

impl TimeFeature {
    /// Features emitted by [`time_features`], in column order.
    pub const RAW: [TimeFeature; 9] = [
        TimeFeature::Tod,
        TimeFeature::Dow,
        TimeFeature::IsWeekend,
        TimeFeature::Dom,
        TimeFeature::DoyFrac,
        TimeFeature::MonthStart,
        TimeFeature::MonthEnd,
        TimeFeature::QuarterStart,
        TimeFeature::QuarterEnd,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TimeFeature::Tod => "tod",
            TimeFeature::Dow => "dow",
            TimeFeature::IsWeekend => "is_weekend",
            TimeFeature::Dom => "dom",
            TimeFeature::DoyFrac => "doy_frac",
            TimeFeature::MonthStart => "month_start",
            TimeFeature::MonthEnd => "month_end",
            TimeFeature::QuarterStart => "quarter_start",
            TimeFeature::QuarterEnd => "quarter_end",
            TimeFeature::Hour => "hour",
            TimeFeature::Month => "month",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let all = [
            TimeFeature::Tod,
            TimeFeature::Dow,
            TimeFeature::IsWeekend,
            TimeFeature::Dom,
            TimeFeature::DoyFrac,
            TimeFeature::MonthStart,
            TimeFeature::MonthEnd,
            TimeFeature::QuarterStart,
            TimeFeature::QuarterEnd,
            TimeFeature::Hour,
            TimeFeature::Month,
        ];
        all.into_iter().find(|f| f.name() == name)
    }

    pub fn value(&self, ts: Timestamp) -> f64 {
        let date = ts.date();
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            TimeFeature::Tod => time_of_day(ts),
            TimeFeature::Dow => f64::from(date.weekday().num_days_from_monday()),
            TimeFeature::IsWeekend => indicator(matches!(date.weekday(), Weekday::Sat | Weekday::Sun)),
            TimeFeature::Dom => f64::from(date.day()),
            TimeFeature::DoyFrac => year_fraction(ts),
            TimeFeature::MonthStart => indicator(date.day() == 1),
            TimeFeature::MonthEnd => indicator(is_month_end(date)),
            TimeFeature::QuarterStart => indicator(date.day() == 1 && date.month() % 3 == 1),
            TimeFeature::QuarterEnd => indicator(date.month() % 3 == 0 && is_month_end(date)),
            TimeFeature::Hour => f64::from(ts.hour()),
            TimeFeature::Month => f64::from(date.month()),
        }
    }
}

fn is_month_end(date: NaiveDate) -> bool {
    date.succ_opt().is_none_or(|next| next.month() != date.month())
}

pub(crate) fn time_of_day(ts: Timestamp) -> f64 {
    f64::from(ts.num_seconds_from_midnight()) / 86_400.0
}

pub(crate) fn year_fraction(ts: Timestamp) -> f64 {
    let date = ts.date();
    let days = if date.leap_year() { 366.0 } else { 365.0 };
    (f64::from(date.ordinal0()) + time_of_day(ts)) / days
}

pub(crate) fn week_fraction(ts: Timestamp) -> f64 {
    (f64::from(ts.date().weekday().num_days_from_monday()) + time_of_day(ts)) / 7.0
}

/// Raw calendar features for each grid point: `tod`, `dow`, `is_weekend`,
/// `dom`, `doy_frac` and the month/quarter boundary indicators.
pub fn time_features(grid: &[Timestamp]) -> Vec<Column> {
    TimeFeature::RAW
        .iter()
        .map(|f| Column::new(f.name(), grid.iter().map(|&t| f.value(t)).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::parse_timestamp;

    fn get(cols: &[Column], name: &str) -> f64 {
        cols.iter().find(|c| c.name == name).unwrap().values[0]
    }

    #[test]
    fn calendar_facts() {
        let c = time_features(&[parse_timestamp("2016-01-01T00:00:00").unwrap()]);
        assert_eq!(get(&c, "tod"), 0.0);
        assert_eq!(get(&c, "dow"), 4.0);
        assert_eq!(get(&c, "is_weekend"), 0.0);
        assert_eq!(get(&c, "month_start"), 1.0);
        assert_eq!(get(&c, "quarter_start"), 1.0);

        let c = time_features(&[parse_timestamp("2016-01-02T06:00:00").unwrap()]);
        assert_eq!(get(&c, "tod"), 0.25);
        assert_eq!(get(&c, "dow"), 5.0);
        assert_eq!(get(&c, "is_weekend"), 1.0);

        let c = time_features(&[parse_timestamp("2015-12-31").unwrap()]);
        assert_eq!(get(&c, "month_end"), 1.0);
        assert_eq!(get(&c, "quarter_end"), 1.0);
        assert_eq!(get(&c, "month_start"), 0.0);
    }

    #[test]
    fn week_fraction_is_zero_at_monday_midnight() {
        assert_eq!(week_fraction(parse_timestamp("2024-01-01").unwrap()), 0.0);
        let sunday_noon = parse_timestamp("2024-01-07T12:00:00").unwrap();
        assert!((week_fraction(sunday_noon) - 6.5 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn year_fraction_handles_leap_years() {
        assert_eq!(year_fraction(parse_timestamp("2016-01-01").unwrap()), 0.0);
        let last = year_fraction(parse_timestamp("2016-12-31").unwrap());
        assert!((last - 365.0 / 366.0).abs() < 1e-15);
    }
}
