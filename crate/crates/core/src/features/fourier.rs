use std::f64::consts::PI;

use super::time::{time_of_day, week_fraction, year_fraction};
use super::{check_changepoints, Column, FeatureError};
use crate::series::{Frequency, Timestamp};

/// A seasonal period and how a timestamp maps to its position `d(t)` in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeasonalPeriod {
    /// Fraction of the day since midnight.
    Daily,
    /// Fraction of the week since Monday 00:00.
    Weekly,
    /// `(day_of_year - 1 + tod) / days_in_year`.
    Yearly,
    /// Explicit length in grid steps, anchored at 1970-01-01T00:00.
    Custom(f64),
}

impl SeasonalPeriod {
    pub fn tag(&self) -> String {
        match self {
            SeasonalPeriod::Daily => "daily".into(),
            SeasonalPeriod::Weekly => "weekly".into(),
            SeasonalPeriod::Yearly => "yearly".into(),
            SeasonalPeriod::Custom(len) => format!("p{len}"),
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "daily" => Some(SeasonalPeriod::Daily),
            "weekly" => Some(SeasonalPeriod::Weekly),
            "yearly" => Some(SeasonalPeriod::Yearly),
            other => other
                .strip_prefix('p')
                .and_then(|n| n.parse::<f64>().ok())
                .filter(|n| *n > 0.0)
                .map(SeasonalPeriod::Custom),
        }
    }

    /// Approximate period length in seconds, used for ordering.
    pub fn approx_seconds(&self, freq: Frequency) -> f64 {
        match self {
            SeasonalPeriod::Daily => 86_400.0,
            SeasonalPeriod::Weekly => 7.0 * 86_400.0,
            SeasonalPeriod::Yearly => 365.25 * 86_400.0,
            SeasonalPeriod::Custom(len) => len * freq.nominal_seconds(),
        }
    }

    /// Largest Fourier order below the Nyquist limit at sampling `freq`;
    /// higher orders alias onto lower ones.
    pub fn max_order(&self, freq: Frequency) -> usize {
        let steps = self.approx_seconds(freq) / freq.nominal_seconds();
        ((steps / 2.0 - 1e-9).ceil().max(0.0) as usize).saturating_sub(1)
    }

    /// Position `d(t)` in `[0, 1)`.
    pub fn fraction(&self, ts: Timestamp, freq: Frequency) -> f64 {
        match self {
            SeasonalPeriod::Daily => time_of_day(ts),
            SeasonalPeriod::Weekly => week_fraction(ts),
            SeasonalPeriod::Yearly => year_fraction(ts),
            SeasonalPeriod::Custom(len) => {
                let epoch = chrono::NaiveDate::from_ymd_opt(1970, 1, 1)
                    .expect("valid date")
                    .and_hms_opt(0, 0, 0)
                    .expect("valid time");
                freq.elapsed_steps(epoch, ts).rem_euclid(*len) / len
            }
        }
    }
}

/// A Fourier seasonality term of a given order, optionally with changepoints
/// after which its coefficients may change.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalitySpec {
    pub period: SeasonalPeriod,
    pub order: usize,
    pub changepoints: Vec<Timestamp>,
}

impl SeasonalitySpec {
    pub fn new(period: SeasonalPeriod, order: usize) -> Self {
        Self { period, order, changepoints: Vec::new() }
    }

    /// Order actually used at sampling `freq`.
    pub fn effective_order(&self, freq: Frequency) -> usize {
        self.order.min(self.period.max_order(freq))
    }

    /// Base column names in `sin1, cos1, sin2, ...` order.
    pub fn column_names(&self) -> Vec<String> {
        let tag = self.period.tag();
        (1..=self.order)
            .flat_map(|m| [format!("sin{m}_{tag}"), format!("cos{m}_{tag}")])
            .collect()
    }
}

#[inline]
pub(crate) fn fourier_value(d: f64, m: usize, sin: bool) -> f64 {
    let angle = 2.0 * m as f64 * PI * d;
    if sin {
        angle.sin()
    } else {
        angle.cos()
    }
}

/// `sin{m}_{tag}` and `cos{m}_{tag}` columns for `m = 1..=order`, evaluated
/// at the positions `d`.
pub fn fourier_terms(d: &[f64], order: usize, tag: &str) -> Vec<Column> {
    (1..=order)
        .flat_map(|m| {
            [true, false].map(|sin| {
                let name = format!("{}{m}_{tag}", if sin { "sin" } else { "cos" });
                Column::new(name, d.iter().map(|&x| fourier_value(x, m, sin)).collect())
            })
        })
        .collect()
}

/// Seasonality changepoint columns `scp{k}_{c}` = `1{t > t_k} * c` for every
/// changepoint `t_k` and base Fourier column `c`.
pub fn seasonality_cp_basis(
    grid: &[Timestamp],
    freq: Frequency,
    spec: &SeasonalitySpec,
) -> Result<Vec<Column>, FeatureError> {
    if let (Some(first), Some(last)) = (grid.first(), grid.last()) {
        check_changepoints(&spec.changepoints, *first, *last)?;
    }
    let d: Vec<f64> = grid.iter().map(|&t| spec.period.fraction(t, freq)).collect();
    let base = fourier_terms(&d, spec.order, &spec.period.tag());
    let mut out = Vec::with_capacity(base.len() * spec.changepoints.len());
    for (k, cp) in spec.changepoints.iter().enumerate() {
        for col in &base {
            let values = grid
                .iter()
                .zip(&col.values)
                .map(|(t, v)| if t > cp { *v } else { 0.0 })
                .collect();
            out.push(Column::new(format!("scp{}_{}", k + 1, col.name), values));
        }
    }
    Ok(out)
}
