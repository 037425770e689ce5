//! Uniformly spaced univariate series with missing values.
//!
//! A [`TimeSeries`] is a start timestamp, a [`Frequency`] and one optional
//! value per grid point. Month grids keep the start's day of month, clamped
//! to the month end (Jan 31 is followed by Feb 28 or 29, then Mar 31).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use chrono::{Datelike, Months, NaiveDate, NaiveDateTime, Timelike};
use thiserror::Error;

/// Naive UTC timestamp. No time zone arithmetic is ever performed.
pub type Timestamp = NaiveDateTime;

const SECS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("empty input")]
    EmptyInput,
    #[error("timestamps must be strictly increasing (violated at row {0})")]
    NotIncreasing(usize),
    #[error("irregular grid: {0}")]
    IrregularGrid(String),
    #[error("all values are missing")]
    AllMissing,
    #[error("target frequency {target} is not coarser than {from}")]
    NotCoarser { from: Frequency, target: Frequency },
    #[error("target frequency {target} is not a whole multiple of {from}")]
    Misaligned { from: Frequency, target: Frequency },
    #[error("invalid frequency multiple {0}")]
    InvalidMultiple(u32),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl SeriesError {
    pub fn code(&self) -> &'static str {
        match self {
            SeriesError::EmptyInput => "EmptyInput",
            SeriesError::NotIncreasing(_) => "NotIncreasing",
            SeriesError::IrregularGrid(_) => "IrregularGrid",
            SeriesError::AllMissing => "AllMissing",
            SeriesError::NotCoarser { .. } => "NotCoarser",
            SeriesError::Misaligned { .. } => "Misaligned",
            SeriesError::InvalidMultiple(_) => "InvalidMultiple",
            SeriesError::Parse { .. } => "Parse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrequencyUnit {
    Minute,
    Hour,
    Day,
    Week,
    Month,
}

/// Grid spacing: a unit and a positive multiple of it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Frequency {
    unit: FrequencyUnit,
    multiple: u32,
}

impl Frequency {
    pub fn new(unit: FrequencyUnit, multiple: u32) -> Result<Self, SeriesError> {
        if multiple == 0 {
            return Err(SeriesError::InvalidMultiple(multiple));
        }
        Ok(Self { unit, multiple })
    }

    pub const fn minutely() -> Self {
        Self { unit: FrequencyUnit::Minute, multiple: 1 }
    }
    pub const fn hourly() -> Self {
        Self { unit: FrequencyUnit::Hour, multiple: 1 }
    }
    pub const fn daily() -> Self {
        Self { unit: FrequencyUnit::Day, multiple: 1 }
    }
    pub const fn weekly() -> Self {
        Self { unit: FrequencyUnit::Week, multiple: 1 }
    }
    pub const fn monthly() -> Self {
        Self { unit: FrequencyUnit::Month, multiple: 1 }
    }

    pub fn unit(&self) -> FrequencyUnit {
        self.unit
    }

    pub fn multiple(&self) -> u32 {
        self.multiple
    }

    /// Exact step length in seconds; `None` for calendar months.
    pub fn step_seconds(&self) -> Option<i64> {
        let unit = match self.unit {
            FrequencyUnit::Minute => 60,
            FrequencyUnit::Hour => 3_600,
            FrequencyUnit::Day => SECS_PER_DAY,
            FrequencyUnit::Week => 7 * SECS_PER_DAY,
            FrequencyUnit::Month => return None,
        };
        Some(unit * i64::from(self.multiple))
    }

    /// Approximate step length, used only to compare frequencies.
    pub fn nominal_seconds(&self) -> f64 {
        match self.step_seconds() {
            Some(s) => s as f64,
            None => 30.436_875 * SECS_PER_DAY as f64 * f64::from(self.multiple),
        }
    }

    /// Seasonal period used for the seasonal-naive MASE scale:
    /// 24 for hourly, 7 for daily and 12 for monthly data.
    pub fn seasonal_period(&self) -> usize {
        let m = self.multiple as usize;
        let per = match self.unit {
            FrequencyUnit::Minute => 1_440,
            FrequencyUnit::Hour => 24,
            FrequencyUnit::Day => 7,
            FrequencyUnit::Week => 52,
            FrequencyUnit::Month => 12,
        };
        if per % m == 0 && per / m > 1 {
            per / m
        } else {
            1
        }
    }

    /// The `k`-th grid point after `start` (negative `k` walks backwards).
    pub fn grid_point(&self, start: Timestamp, k: i64) -> Timestamp {
        match self.step_seconds() {
            Some(step) => start + chrono::Duration::seconds(step * k),
            None => {
                let months = k * i64::from(self.multiple);
                let date = if months >= 0 {
                    start.date().checked_add_months(Months::new(months as u32))
                } else {
                    start.date().checked_sub_months(Months::new((-months) as u32))
                }
                .expect("month arithmetic within chrono range");
                date.and_time(start.time())
            }
        }
    }

    /// Grid index of `ts` on the grid anchored at `start`, if it lies on it.
    pub fn index_of(&self, start: Timestamp, ts: Timestamp) -> Option<i64> {
        match self.step_seconds() {
            Some(step) => {
                let diff = (ts - start).num_seconds();
                let exact = (ts - start).subsec_nanos() == 0;
                (exact && diff % step == 0).then_some(diff / step)
            }
            None => {
                let k = self.month_floor(start, ts);
                (self.grid_point(start, k) == ts).then_some(k)
            }
        }
    }

    /// Elapsed time from `origin` to `ts` in (possibly fractional) grid steps.
    pub fn elapsed_steps(&self, origin: Timestamp, ts: Timestamp) -> f64 {
        match self.step_seconds() {
            Some(step) => (ts - origin).num_milliseconds() as f64 / (step as f64 * 1_000.0),
            None => {
                let k = self.month_floor(origin, ts);
                let lo = self.grid_point(origin, k);
                let hi = self.grid_point(origin, k + 1);
                let frac = (ts - lo).num_seconds() as f64 / (hi - lo).num_seconds() as f64;
                k as f64 + frac
            }
        }
    }

    /// Largest `k` with `grid_point(origin, k) <= ts` (month grids).
    fn month_floor(&self, origin: Timestamp, ts: Timestamp) -> i64 {
        let months = (i64::from(ts.year()) - i64::from(origin.year())) * 12
            + i64::from(ts.month()) - i64::from(origin.month());
        let mut k = months.div_euclid(i64::from(self.multiple));
        while self.grid_point(origin, k) > ts {
            k -= 1;
        }
        while self.grid_point(origin, k + 1) <= ts {
            k += 1;
        }
        k
    }

    /// Whether daily-or-coarser timestamps can be written as plain dates.
    pub fn is_subdaily(&self) -> bool {
        matches!(self.unit, FrequencyUnit::Minute | FrequencyUnit::Hour)
    }

    /// Parses `day`, `hour`, `3hour`, `15min`, `week`, `month`, `quarter`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim().to_ascii_lowercase();
        let digits: String = s.chars().take_while(|c| c.is_ascii_digit()).collect();
        let rest = &s[digits.len()..];
        let mult: u32 = if digits.is_empty() { 1 } else { digits.parse().ok()? };
        let (unit, mult) = match rest {
            "min" | "minute" | "t" => (FrequencyUnit::Minute, mult),
            "h" | "hour" | "hourly" => (FrequencyUnit::Hour, mult),
            "d" | "day" | "daily" => (FrequencyUnit::Day, mult),
            "w" | "week" | "weekly" => (FrequencyUnit::Week, mult),
            "m" | "month" | "monthly" => (FrequencyUnit::Month, mult),
            "q" | "quarter" | "quarterly" => (FrequencyUnit::Month, 3 * mult),
            _ => return None,
        };
        Frequency::new(unit, mult).ok()
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unit = match self.unit {
            FrequencyUnit::Minute => "min",
            FrequencyUnit::Hour => "hour",
            FrequencyUnit::Day => "day",
            FrequencyUnit::Week => "week",
            FrequencyUnit::Month => "month",
        };
        if self.multiple == 1 {
            f.write_str(unit)
        } else {
            write!(f, "{}{}", self.multiple, unit)
        }
    }
}

/// Known anomaly period, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnomalyWindow {
    start: Timestamp,
    end: Timestamp,
}

impl AnomalyWindow {
    pub fn new(start: Timestamp, end: Timestamp) -> Option<Self> {
        (start <= end).then_some(Self { start, end })
    }

    pub fn contains(&self, ts: Timestamp) -> bool {
        self.start <= ts && ts <= self.end
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn end(&self) -> Timestamp {
        self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    start: Timestamp,
    freq: Frequency,
    values: Vec<Option<f64>>,
}

impl TimeSeries {
    /// Builds a series, requiring at least one observed value.
    pub fn new(
        start: Timestamp,
        freq: Frequency,
        values: Vec<Option<f64>>,
    ) -> Result<Self, SeriesError> {
        if values.is_empty() {
            return Err(SeriesError::EmptyInput);
        }
        if values.iter().all(Option::is_none) {
            return Err(SeriesError::AllMissing);
        }
        Ok(Self { start, freq, values })
    }

    /// Builds a fully observed series.
    pub fn from_values(
        start: Timestamp,
        freq: Frequency,
        values: &[f64],
    ) -> Result<Self, SeriesError> {
        Self::new(start, freq, values.iter().map(|&v| Some(v)).collect())
    }

    pub(crate) fn from_parts(start: Timestamp, freq: Frequency, values: Vec<Option<f64>>) -> Self {
        Self { start, freq, values }
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    pub fn freq(&self) -> Frequency {
        self.freq
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp(&self, i: usize) -> Timestamp {
        self.freq.grid_point(self.start, i as i64)
    }

    pub fn timestamps(&self) -> Vec<Timestamp> {
        (0..self.len()).map(|i| self.timestamp(i)).collect()
    }

    pub fn end(&self) -> Timestamp {
        self.timestamp(self.len() - 1)
    }

    /// The `n` grid points following the last one.
    pub fn future_timestamps(&self, n: usize) -> Vec<Timestamp> {
        let base = self.len() as i64;
        (0..n as i64)
            .map(|k| self.freq.grid_point(self.start, base + k))
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Sub-series over the index range (may be all missing).
    pub fn slice(&self, range: std::ops::Range<usize>) -> TimeSeries {
        TimeSeries {
            start: self.timestamp(range.start),
            freq: self.freq,
            values: self.values[range].to_vec(),
        }
    }

    /// Values with missing entries as `NaN`.
    pub fn to_nan_vec(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    /// `(timestamp, value)` pairs in grid order.
    pub fn points(&self) -> Vec<(Timestamp, Option<f64>)> {
        self.timestamps().into_iter().zip(self.values.iter().copied()).collect()
    }
}

/// Infers the frequency of strictly increasing points from the modal gap.
///
/// Absent grid points become missing values. Points off the inferred grid
/// are dropped; if fewer than 90% of the gaps are whole multiples of the
/// inferred step the input is rejected as irregular.
pub fn validate(points: &[(Timestamp, Option<f64>)]) -> Result<TimeSeries, SeriesError> {
    if points.is_empty() {
        return Err(SeriesError::EmptyInput);
    }
    check_increasing(points)?;
    if points.len() == 1 {
        return Err(SeriesError::IrregularGrid(
            "a single point does not determine a frequency".into(),
        ));
    }
    let freq = infer_frequency(points)?;
    validate_with_freq(points, freq)
}

/// Like [`validate`] with a known frequency.
pub fn validate_with_freq(
    points: &[(Timestamp, Option<f64>)],
    freq: Frequency,
) -> Result<TimeSeries, SeriesError> {
    if points.is_empty() {
        return Err(SeriesError::EmptyInput);
    }
    check_increasing(points)?;
    let start = points[0].0;
    let indices: Vec<Option<i64>> = points.iter().map(|(ts, _)| freq.index_of(start, *ts)).collect();
    let gaps = points.len().saturating_sub(1);
    if gaps > 0 {
        let explained = indices
            .windows(2)
            .filter(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if b > a))
            .count();
        if (explained as f64) < 0.9 * gaps as f64 {
            return Err(SeriesError::IrregularGrid(format!(
                "only {explained} of {gaps} gaps are multiples of {freq}"
            )));
        }
    }
    let last = indices.iter().rev().find_map(|i| *i).unwrap_or(0);
    let mut values = vec![None; last as usize + 1];
    let mut dropped = 0usize;
    for (idx, (_, v)) in indices.iter().zip(points) {
        match idx {
            Some(i) => values[*i as usize] = *v,
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} points that are off the {freq} grid");
    }
    TimeSeries::new(start, freq, values)
}

fn check_increasing(points: &[(Timestamp, Option<f64>)]) -> Result<(), SeriesError> {
    match points.windows(2).position(|w| w[1].0 <= w[0].0) {
        Some(i) => Err(SeriesError::NotIncreasing(i + 1)),
        None => Ok(()),
    }
}

fn infer_frequency(points: &[(Timestamp, Option<f64>)]) -> Result<Frequency, SeriesError> {
    let mut counts: HashMap<i64, usize> = HashMap::new();
    for w in points.windows(2) {
        *counts.entry((w[1].0 - w[0].0).num_seconds()).or_default() += 1;
    }
    // Smallest gap among the most frequent ones.
    let (&modal, _) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("at least one gap");
    let irregular = || SeriesError::IrregularGrid(format!("no supported frequency with a {modal}s step"));
    let days = modal as f64 / SECS_PER_DAY as f64;
    let freq = if modal <= 0 {
        return Err(irregular());
    } else if modal < 3_600 {
        if modal % 60 != 0 || 60 % (modal / 60) != 0 {
            return Err(irregular());
        }
        Frequency::new(FrequencyUnit::Minute, (modal / 60) as u32)?
    } else if modal < SECS_PER_DAY {
        if modal % 3_600 != 0 || 24 % (modal / 3_600) != 0 {
            return Err(irregular());
        }
        Frequency::new(FrequencyUnit::Hour, (modal / 3_600) as u32)?
    } else if modal == SECS_PER_DAY {
        Frequency::daily()
    } else if modal == 7 * SECS_PER_DAY {
        Frequency::weekly()
    } else {
        let months = [(1, 28.0, 31.0), (2, 59.0, 62.0), (3, 89.0, 92.0), (4, 120.0, 123.0), (6, 181.0, 184.0), (12, 365.0, 366.0)];
        match months.iter().find(|(_, lo, hi)| days >= *lo && days <= *hi) {
            Some((m, _, _)) => Frequency::new(FrequencyUnit::Month, *m)?,
            None => return Err(irregular()),
        }
    };
    Ok(freq)
}

/// Series with missing values filled, plus the mask of filled positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedSeries {
    pub series: TimeSeries,
    pub imputed: Vec<bool>,
}

impl ImputedSeries {
    pub fn values(&self) -> Vec<f64> {
        self.series.values.iter().map(|v| v.expect("imputed series is complete")).collect()
    }
}

/// Fills interior gaps by linear interpolation between the nearest observed
/// neighbors and edge gaps with the nearest observed value.
pub fn impute_linear(ts: &TimeSeries) -> Result<ImputedSeries, SeriesError> {
    let observed: Vec<usize> = (0..ts.len()).filter(|&i| ts.values[i].is_some()).collect();
    let (&first, &last) = match (observed.first(), observed.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(SeriesError::AllMissing),
    };
    let mut out: Vec<f64> = ts.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
    let first_val = out[first];
    let last_val = out[last];
    out[..first].iter_mut().for_each(|v| *v = first_val);
    out[last + 1..].iter_mut().for_each(|v| *v = last_val);
    for pair in observed.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a > 1 {
            let (va, vb) = (out[a], out[b]);
            let span = (b - a) as f64;
            for (k, v) in out.iter_mut().enumerate().take(b).skip(a + 1) {
                let w = (k - a) as f64 / span;
                *v = va + (vb - va) * w;
            }
        }
    }
    Ok(ImputedSeries {
        series: TimeSeries::from_parts(ts.start, ts.freq, out.into_iter().map(Some).collect()),
        imputed: ts.values.iter().map(Option::is_none).collect(),
    })
}

/// Marks values inside any anomaly window as missing.
///
/// The result may be entirely missing; callers that need observed values
/// (such as [`impute_linear`]) report that case.
pub fn mask_anomalies(ts: &TimeSeries, windows: &[AnomalyWindow]) -> TimeSeries {
    if windows.is_empty() {
        return ts.clone();
    }
    let values = ts
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let t = ts.timestamp(i);
            if windows.iter().any(|w| w.contains(t)) {
                None
            } else {
                *v
            }
        })
        .collect();
    TimeSeries::from_parts(ts.start, ts.freq, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregateStat {
    Mean,
    Sum,
}

/// Reduces a series onto a coarser grid anchored at its start.
///
/// Incomplete trailing buckets are dropped; buckets whose members are all
/// missing are missing.
pub fn aggregate(
    ts: &TimeSeries,
    target: Frequency,
    stat: AggregateStat,
) -> Result<TimeSeries, SeriesError> {
    let source = ts.freq;
    if target.nominal_seconds() <= source.nominal_seconds() {
        return Err(SeriesError::NotCoarser { from: source, target });
    }
    if let (Some(s), Some(t)) = (source.step_seconds(), target.step_seconds()) {
        if t % s != 0 {
            return Err(SeriesError::Misaligned { from: source, target });
        }
    }
    let end_exclusive = source.grid_point(ts.start, ts.len() as i64);
    let mut values = Vec::new();
    let mut i = 0usize;
    let mut bucket = 0i64;
    loop {
        let bucket_end = target.grid_point(ts.start, bucket + 1);
        if bucket_end > end_exclusive {
            break;
        }
        let (mut sum, mut count) = (0.0, 0usize);
        while i < ts.len() && ts.timestamp(i) < bucket_end {
            if let Some(v) = ts.values[i] {
                sum += v;
                count += 1;
            }
            i += 1;
        }
        values.push((count > 0).then(|| match stat {
            AggregateStat::Mean => sum / count as f64,
            AggregateStat::Sum => sum,
        }));
        bucket += 1;
    }
    TimeSeries::new(ts.start, target, values)
}

/// Parses `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS` or `YYYY-MM-DD HH:MM:SS`.
pub fn parse_timestamp(s: &str) -> Option<Timestamp> {
    let s = s.trim();
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0);
    }
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

/// Formats a timestamp as a plain date when `date_only`, else ISO-8601.
pub fn format_timestamp(ts: Timestamp, date_only: bool) -> String {
    if date_only {
        ts.format("%Y-%m-%d").to_string()
    } else {
        ts.format("%Y-%m-%dT%H:%M:%S").to_string()
    }
}

/// Whether every timestamp of the series can be printed as a plain date.
pub fn dates_only(ts: &TimeSeries) -> bool {
    !ts.freq.is_subdaily() && ts.start.time().num_seconds_from_midnight() == 0
}

/// A parsed input table: the target series and regressor columns aligned to
/// the same grid.
#[derive(Debug, Clone)]
pub struct SeriesFrame {
    pub series: TimeSeries,
    pub regressors: Vec<(String, Vec<Option<f64>>)>,
}

impl SeriesFrame {
    pub fn regressor(&self, name: &str) -> Option<&[Option<f64>]> {
        self.regressors.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

/// Parses CSV text with header `ts,y[,<regressor>...]`. Empty cells are
/// missing values.
pub fn read_csv_str(text: &str, freq: Option<Frequency>) -> Result<SeriesFrame, SeriesError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| SeriesError::Parse { line: 1, message: e.to_string() })?
        .clone();
    if header.len() < 2 || &header[0] != "ts" || &header[1] != "y" {
        return Err(SeriesError::Parse {
            line: 1,
            message: "header must start with `ts,y`".into(),
        });
    }
    let reg_names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
    let mut points = Vec::new();
    let mut reg_rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| SeriesError::Parse { line, message: e.to_string() })?;
        let ts = parse_timestamp(&record[0]).ok_or_else(|| SeriesError::Parse {
            line,
            message: format!("bad timestamp `{}`", &record[0]),
        })?;
        let parse_cell = |cell: &str| -> Result<Option<f64>, SeriesError> {
            if cell.is_empty() {
                return Ok(None);
            }
            cell.parse::<f64>()
                .map(Some)
                .map_err(|_| SeriesError::Parse { line, message: format!("bad number `{cell}`") })
        };
        points.push((ts, parse_cell(record.get(1).unwrap_or(""))?));
        let regs = (0..reg_names.len())
            .map(|j| parse_cell(record.get(j + 2).unwrap_or("")))
            .collect::<Result<Vec<_>, _>>()?;
        reg_rows.push(regs);
    }
    let series = match freq {
        Some(f) => validate_with_freq(&points, f)?,
        None => validate(&points)?,
    };
    let mut regressors: Vec<(String, Vec<Option<f64>>)> =
        reg_names.into_iter().map(|n| (n, vec![None; series.len()])).collect();
    for ((ts, _), regs) in points.iter().zip(&reg_rows) {
        if let Some(i) = series.freq.index_of(series.start, *ts) {
            for (col, v) in regressors.iter_mut().zip(regs) {
                col.1[i as usize] = *v;
            }
        }
    }
    Ok(SeriesFrame { series, regressors })
}

pub fn read_csv(path: &Path, freq: Option<Frequency>) -> crate::Result<SeriesFrame> {
    let text = std::fs::read_to_string(path).map_err(|source| crate::Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(read_csv_str(&text, freq)?)
}

/// Serializes a series as `ts,y` CSV (missing values as empty cells).
pub fn to_csv_string(ts: &TimeSeries) -> String {
    let date_only = dates_only(ts);
    let mut out = String::from("ts,y\n");
    for (t, v) in ts.points() {
        out.push_str(&format_timestamp(t, date_only));
        out.push(',');
        if let Some(v) = v {
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn day(d: u32) -> Timestamp {
        NaiveDate::from_ymd_opt(2020, 1, d).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn validate_identity_grid() {
        let ts = validate(&[(day(1), Some(1.0)), (day(2), Some(2.0)), (day(3), Some(3.0))]).unwrap();
        assert_eq!(ts.freq(), Frequency::daily());
        assert_eq!(ts.values(), &[Some(1.0), Some(2.0), Some(3.0)]);
    }

    #[test]
    fn validate_inserts_gaps() {
        let pts = [(day(1), Some(1.0)), (day(2), Some(2.0)), (day(4), Some(4.0)), (day(5), Some(5.0))];
        let ts = validate(&pts).unwrap();
        assert_eq!(ts.values(), &[Some(1.0), Some(2.0), None, Some(4.0), Some(5.0)]);
        let ts = validate_with_freq(&[(day(1), Some(1.0)), (day(3), Some(3.0))], Frequency::daily()).unwrap();
        assert_eq!(ts.values(), &[Some(1.0), None, Some(3.0)]);
    }

    #[test]
    fn validate_rejects_irregular() {
        let pts = [(day(1), Some(1.0)), (day(1) + chrono::Duration::hours(13), Some(2.0))];
        assert!(matches!(validate(&pts), Err(SeriesError::IrregularGrid(_))));
        assert_eq!(validate(&[]), Err(SeriesError::EmptyInput));
        assert_eq!(
            validate(&[(day(1), None), (day(2), None)]),
            Err(SeriesError::AllMissing)
        );
        assert_eq!(
            validate(&[(day(2), Some(1.0)), (day(1), Some(1.0))]),
            Err(SeriesError::NotIncreasing(1))
        );
    }

    #[test]
    fn month_grid_clamps_to_month_end() {
        let start = NaiveDate::from_ymd_opt(2021, 1, 31).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let f = Frequency::monthly();
        assert_eq!(f.grid_point(start, 1).date(), NaiveDate::from_ymd_opt(2021, 2, 28).unwrap());
        assert_eq!(f.grid_point(start, 2).date(), NaiveDate::from_ymd_opt(2021, 3, 31).unwrap());
        let pts: Vec<_> = (0..6).map(|k| (f.grid_point(start, k), Some(k as f64))).collect();
        let ts = validate(&pts).unwrap();
        assert_eq!(ts.freq(), Frequency::monthly());
        assert_eq!(ts.len(), 6);
    }

    #[test]
    fn impute_examples() {
        let f = Frequency::daily();
        let ts = TimeSeries::new(day(1), f, vec![Some(1.0), None, Some(3.0)]).unwrap();
        assert_eq!(impute_linear(&ts).unwrap().values(), vec![1.0, 2.0, 3.0]);
        let ts = TimeSeries::new(day(1), f, vec![None, Some(5.0), None]).unwrap();
        let imp = impute_linear(&ts).unwrap();
        assert_eq!(imp.values(), vec![5.0, 5.0, 5.0]);
        assert_eq!(imp.imputed, vec![true, false, true]);
        let ts = TimeSeries::new(day(1), f, vec![Some(1.0), None, None, Some(4.0)]).unwrap();
        assert_eq!(impute_linear(&ts).unwrap().values(), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn mask_examples() {
        let ts = TimeSeries::from_values(day(1), Frequency::daily(), &[1.0, 2.0, 3.0]).unwrap();
        let w = AnomalyWindow::new(day(2), day(2)).unwrap();
        assert_eq!(mask_anomalies(&ts, &[w]).values(), &[Some(1.0), None, Some(3.0)]);
        assert_eq!(mask_anomalies(&ts, &[]), ts);
        let all = AnomalyWindow::new(day(1), day(3)).unwrap();
        let masked = mask_anomalies(&ts, &[all]);
        assert_eq!(masked.missing_count(), 3);
        assert_eq!(impute_linear(&masked), Err(SeriesError::AllMissing));
    }

    #[test]
    fn aggregate_examples() {
        let v: Vec<f64> = (1..=14).map(f64::from).collect();
        let ts = TimeSeries::from_values(day(1), Frequency::daily(), &v).unwrap();
        let w = aggregate(&ts, Frequency::weekly(), AggregateStat::Mean).unwrap();
        assert_eq!(w.values(), &[Some(4.0), Some(11.0)]);
        let ts10 = TimeSeries::from_values(day(1), Frequency::daily(), &v[..10]).unwrap();
        let w = aggregate(&ts10, Frequency::weekly(), AggregateStat::Mean).unwrap();
        assert_eq!(w.values(), &[Some(4.0)]);
        let hourly = TimeSeries::from_values(day(1), Frequency::hourly(), &[1.0; 48]).unwrap();
        let d = aggregate(&hourly, Frequency::daily(), AggregateStat::Sum).unwrap();
        assert_eq!(d.values(), &[Some(24.0), Some(24.0)]);
        assert!(matches!(
            aggregate(&ts, Frequency::daily(), AggregateStat::Mean),
            Err(SeriesError::NotCoarser { .. })
        ));
    }

    #[test]
    fn aggregate_daily_to_monthly() {
        let start = NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let ts = TimeSeries::from_values(start, Frequency::daily(), &vec![1.0; 70]).unwrap();
        let m = aggregate(&ts, Frequency::monthly(), AggregateStat::Sum).unwrap();
        assert_eq!(m.values(), &[Some(31.0), Some(28.0)]);
    }

    #[test]
    fn csv_parsing_with_regressors() {
        let text = "ts,y,temp\n2020-01-01,1,10\n2020-01-02,,11\n2020-01-04,4,\n";
        let frame = read_csv_str(text, None).unwrap();
        assert_eq!(frame.series.values(), &[Some(1.0), None, None, Some(4.0)]);
        assert_eq!(frame.regressor("temp").unwrap(), &[Some(10.0), Some(11.0), None, None]);
        assert!(read_csv_str("date,y\n", None).is_err());
    }

    proptest! {
        #[test]
        fn serialize_then_validate_is_identity(
            vals in prop::collection::vec(prop::option::weighted(0.8, -1e6f64..1e6), 2..60),
            hourly in any::<bool>(),
        ) {
            let mut vals = vals;
            vals[0] = Some(1.0);
            let last = vals.len() - 1;
            vals[last] = Some(2.0);
            let freq = if hourly { Frequency::hourly() } else { Frequency::daily() };
            let ts = TimeSeries::new(day(1), freq, vals).unwrap();
            let text = to_csv_string(&ts);
            let back = read_csv_str(&text, Some(freq)).unwrap();
            prop_assert_eq!(back.series, ts);
        }

        #[test]
        fn impute_is_idempotent_and_preserves_observed(
            vals in prop::collection::vec(prop::option::weighted(0.6, -100.0f64..100.0), 1..50),
        ) {
            prop_assume!(vals.iter().any(Option::is_some));
            let ts = TimeSeries::new(day(1), Frequency::daily(), vals.clone()).unwrap();
            let once = impute_linear(&ts).unwrap();
            prop_assert_eq!(once.series.missing_count(), 0);
            for (o, v) in once.values().iter().zip(&vals) {
                if let Some(v) = v { prop_assert_eq!(o, v); }
            }
            let twice = impute_linear(&once.series).unwrap();
            prop_assert_eq!(twice.series, once.series);
        }

        #[test]
        fn mean_aggregate_of_constant_is_constant(c in -1e3f64..1e3, n in 7usize..100) {
            let ts = TimeSeries::from_values(day(1), Frequency::daily(), &vec![c; n]).unwrap();
            let w = aggregate(&ts, Frequency::weekly(), AggregateStat::Mean).unwrap();
            for v in w.values() {
                prop_assert!((v.unwrap() - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }
    }
}
