//! Rolling-origin split planning, backtest execution and scale-free
//! accuracy metrics.

use std::fmt::Write as _;
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::forecast::{fit_with, ForecastConfig};
use crate::holidays::HolidayCalendar;
use crate::series::{format_timestamp, dates_only, TimeSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("in-sample seasonal differences are all zero")]
    DenominatorZero,
    #[error("zero denominator at index {0}")]
    ZeroDenominator(usize),
    #[error("{actual} actuals but {forecast} forecasts")]
    LengthMismatch { actual: usize, forecast: usize },
    #[error("training length {len} must exceed the seasonal period {m}")]
    TrainTooShort { len: usize, m: usize },
    #[error("no observed test points")]
    NoPoints,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluateError {
    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn pairs<'a>(actual: &'a [Option<f64>], forecast: &'a [f64]) -> Result<Vec<(usize, f64, f64)>, MetricError> {
    if actual.len() != forecast.len() {
        return Err(MetricError::LengthMismatch { actual: actual.len(), forecast: forecast.len() });
    }
    let v: Vec<(usize, f64, f64)> =
        actual.iter().zip(forecast).enumerate().filter_map(|(i, (a, f))| a.map(|a| (i, a, *f))).collect();
    if v.is_empty() {
        return Err(MetricError::NoPoints);
    }
    Ok(v)
}

/// Mean absolute error divided by the in-sample mean absolute `m`-step
/// seasonal difference. Missing actuals (`None`) are skipped on both sides.
pub fn mase(train: &[Option<f64>], actual: &[Option<f64>], forecast: &[f64], m: usize) -> Result<f64, MetricError> {
    if m == 0 || train.len() <= m {
        return Err(MetricError::TrainTooShort { len: train.len(), m });
    }
    let diffs: Vec<f64> = (m..train.len())
        .filter_map(|t| match (train[t], train[t - m]) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        })
        .collect();
    let scale = diffs.iter().sum::<f64>() / diffs.len() as f64;
    if diffs.is_empty() || scale == 0.0 {
        return Err(MetricError::DenominatorZero);
    }
    let p = pairs(actual, forecast)?;
    let mae = p.iter().map(|(_, a, f)| (a - f).abs()).sum::<f64>() / p.len() as f64;
    Ok(mae / scale)
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[Option<f64>], forecast: &[f64]) -> Result<f64, MetricError> {
    let p = pairs(actual, forecast)?;
    let mut total = 0.0;
    for &(i, a, f) in &p {
        if a == 0.0 {
            return Err(MetricError::ZeroDenominator(i));
        }
        total += ((a - f) / a).abs();
    }
    Ok(100.0 * total / p.len() as f64)
}

/// Symmetric MAPE `2|e| / (|y| + |ŷ|)`, in percent.
pub fn smape(actual: &[Option<f64>], forecast: &[f64]) -> Result<f64, MetricError> {
    let p = pairs(actual, forecast)?;
    let mut total = 0.0;
    for &(i, a, f) in &p {
        let d = a.abs() + f.abs();
        if d == 0.0 {
            return Err(MetricError::ZeroDenominator(i));
        }
        total += 2.0 * (a - f).abs() / d;
    }
    Ok(100.0 * total / p.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// Training always starts at index 0.
    Expanding,
    /// Training covers this many points before each test window.
    Moving(usize),
}

/// Inclusive index bounds of one split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub train_start: usize,
    pub train_end: usize,
    pub test_start: usize,
    pub test_end: usize,
}

impl Split {
    pub fn train(&self) -> Range<usize> {
        self.train_start..self.train_end + 1
    }

    pub fn test(&self) -> Range<usize> {
        self.test_start..self.test_end + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub splits: Vec<Split>,
    pub window: Window,
    pub horizon: usize,
    pub period_between: usize,
    pub k: usize,
}

impl SplitPlan {
    pub fn test_starts(&self) -> Vec<usize> {
        self.splits.iter().map(|s| s.test_start).collect()
    }
}

/// Rolling-origin splits working backward from the series end: test window
/// `i` starts at `n − horizon − i·period`, emitted oldest first.
pub fn make_rolling_splits(
    n: usize,
    horizon: usize,
    period: usize,
    k: usize,
    window: Window,
    min_train: usize,
) -> Result<SplitPlan, EvaluateError> {
    if horizon == 0 || period == 0 || k == 0 {
        return Err(EvaluateError::InvalidPlan(format!("horizon {horizon}, period {period} and K {k} must all be >= 1")));
    }
    if let Window::Moving(0) = window {
        return Err(EvaluateError::InvalidPlan("moving window length must be >= 1".into()));
    }
    let back = horizon + (k - 1) * period;
    let earliest = n.checked_sub(back).ok_or_else(|| {
        EvaluateError::InfeasiblePlan(format!("{k} splits of horizon {horizon} every {period} need more than {n} points"))
    })?;
    let min_train = min_train.max(1);
    let train_len = match window {
        Window::Expanding => earliest,
        Window::Moving(l) => l.min(earliest),
    };
    if train_len < min_train || matches!(window, Window::Moving(l) if l > earliest) {
        return Err(EvaluateError::InfeasiblePlan(format!(
            "earliest split (test start {earliest}) has {earliest} training points, need {}",
            match window {
                Window::Expanding => min_train,
                Window::Moving(l) => l.max(min_train),
            }
        )));
    }
    let splits = (0..k)
        .rev()
        .map(|i| {
            let test_start = n - horizon - i * period;
            let train_start = match window {
                Window::Expanding => 0,
                Window::Moving(l) => test_start - l,
            };
            Split { train_start, train_end: test_start - 1, test_start, test_end: test_start + horizon - 1 }
        })
        .collect();
    Ok(SplitPlan { splits, window, horizon, period_between: period, k })
}

/// Anything that can forecast `horizon` steps after `train` within `ts`.
///
/// Implementations must only read observations in `train`; the full series
/// is passed so that calendar and regressor context stays aligned.
pub trait Forecaster: Sync {
    fn forecast(&self, ts: &TimeSeries, train: Range<usize>, horizon: usize) -> crate::Result<Vec<f64>>;
}

/// Repeats the last observed seasonal cycle of length `m`.
#[derive(Debug, Clone, Copy)]
pub struct SeasonalNaive {
    pub m: usize,
}

impl Forecaster for SeasonalNaive {
    fn forecast(&self, ts: &TimeSeries, train: Range<usize>, horizon: usize) -> crate::Result<Vec<f64>> {
        let values = &ts.values()[train.clone()];
        if values.len() < self.m || self.m == 0 {
            return Err(crate::Error::Config(format!("seasonal naive needs {} training points", self.m)));
        }
        let n = values.len();
        (0..horizon)
            .map(|h| {
                let mut idx = n - self.m + h % self.m;
                loop {
                    if let Some(v) = values[idx] {
                        return Ok(v);
                    }
                    idx = idx
                        .checked_sub(self.m)
                        .ok_or_else(|| crate::Error::Config("no observed value in seasonal position".into()))?;
                }
            })
            .collect()
    }
}

/// Fits a [`ForecastConfig`] on each training window.
#[derive(Debug, Clone)]
pub struct ModelForecaster {
    pub config: ForecastConfig,
    pub holidays: HolidayCalendar,
    /// Regressor columns aligned to the full series grid.
    pub regressors: Vec<(String, Vec<Option<f64>>)>,
}

impl ModelForecaster {
    pub fn new(config: ForecastConfig) -> Self {
        Self { config, holidays: HolidayCalendar::builtin(), regressors: Vec::new() }
    }
}

impl Forecaster for ModelForecaster {
    fn forecast(&self, ts: &TimeSeries, train: Range<usize>, horizon: usize) -> crate::Result<Vec<f64>> {
        let history = ts.slice(train.clone());
        let mut config = self.config.clone();
        if let Some(g) = config.growth.as_mut() {
            g.changepoints.retain(|&c| c > history.start() && c < history.end());
        }
        for s in &mut config.seasonality {
            s.changepoints.retain(|&c| c > history.start() && c < history.end());
        }
        let regs: Vec<(String, Vec<Option<f64>>)> =
            self.regressors.iter().map(|(n, v)| (n.clone(), v[train.clone()].to_vec())).collect();
        let model = fit_with(&history, &regs, &config, &self.holidays)?;
        let future: Vec<(String, Vec<f64>)> = self
            .regressors
            .iter()
            .map(|(n, v)| {
                let end = (train.end + horizon).min(v.len());
                (n.clone(), v[train.end..end].iter().map(|x| x.unwrap_or(f64::NAN)).collect())
            })
            .collect();
        Ok(model.predict(horizon, &future)?.forecast)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub index: usize,
    pub split: Split,
    pub forecast: Vec<f64>,
    /// Observed test values; imputed or missing points are `None`.
    pub actual: Vec<Option<f64>>,
    pub error: Option<String>,
    pub mase: Option<f64>,
    pub mape: Option<f64>,
    pub smape: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub plan: SplitPlan,
    pub splits: Vec<SplitResult>,
    pub seasonal_period: usize,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl BenchmarkReport {
    pub fn n_failed(&self) -> usize {
        self.splits.iter().filter(|s| s.error.is_some()).count()
    }

    /// Mean of per-split MASE over splits where it is defined.
    pub fn mase(&self) -> Option<f64> {
        mean_defined(self.splits.iter().map(|s| s.mase))
    }

    pub fn mape(&self) -> Option<f64> {
        mean_defined(self.splits.iter().map(|s| s.mape))
    }

    pub fn smape(&self) -> Option<f64> {
        mean_defined(self.splits.iter().map(|s| s.smape))
    }

    pub fn total_seconds(&self) -> f64 {
        self.splits.iter().map(|s| s.seconds).sum()
    }

    /// `split_idx,test_start,horizon_step,actual,forecast,abs_err`.
    pub fn detail_csv(&self, ts: &TimeSeries) -> String {
        let date_only = dates_only(ts);
        let mut s = String::from("split_idx,test_start,horizon_step,actual,forecast,abs_err\n");
        for r in &self.splits {
            let start = format_timestamp(ts.timestamp(r.split.test_start), date_only);
            for (h, f) in r.forecast.iter().enumerate() {
                let (a, e) = match r.actual[h] {
                    Some(a) => (a.to_string(), (a - f).abs().to_string()),
                    None => (String::new(), String::new()),
                };
                let _ = writeln!(s, "{},{start},{},{a},{f},{e}", r.index, h + 1);
            }
        }
        s
    }

    /// `metric,horizon,value,n_splits,n_failed`.
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("metric,horizon,value,n_splits,n_failed\n");
        let metrics = [
            ("mase", self.mase(), self.splits.iter().filter(|r| r.mase.is_some()).count()),
            ("mape", self.mape(), self.splits.iter().filter(|r| r.mape.is_some()).count()),
            ("smape", self.smape(), self.splits.iter().filter(|r| r.smape.is_some()).count()),
        ];
        for (name, value, n) in metrics {
            let v = value.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{name},{},{v},{n},{}", self.plan.horizon, self.n_failed());
        }
        s
    }
}

/// Runs every split (in parallel) and scores it against the observed test
/// values; missing test points are not scored. Split failures are
/// recorded, not propagated.
pub fn run_backtest<F: Forecaster>(
    ts: &TimeSeries,
    forecaster: &F,
    plan: &SplitPlan,
    seasonal_period: usize,
) -> BenchmarkReport {
    let values = ts.values();
    let splits = plan
        .splits
        .par_iter()
        .enumerate()
        .map(|(index, split)| {
            let started = Instant::now();
            let outcome = forecaster.forecast(ts, split.train(), plan.horizon);
            let seconds = started.elapsed().as_secs_f64();
            let actual: Vec<Option<f64>> = values[split.test()].to_vec();
            match outcome {
                Ok(forecast) if forecast.len() == plan.horizon => {
                    let train = &values[split.train()];
                    SplitResult {
                        index,
                        split: *split,
                        mase: mase(train, &actual, &forecast, seasonal_period).ok(),
                        mape: mape(&actual, &forecast).ok(),
                        smape: smape(&actual, &forecast).ok(),
                        forecast,
                        actual,
                        error: None,
                        seconds,
                    }
                }
                other => {
                    let error = match other {
                        Ok(f) => format!("forecaster returned {} values for horizon {}", f.len(), plan.horizon),
                        Err(e) => e.to_string(),
                    };
                    log::warn!("split {index} failed: {error}");
                    SplitResult {
                        index,
                        split: *split,
                        forecast: vec![f64::NAN; plan.horizon],
                        actual,
                        error: Some(error),
                        mase: None,
                        mape: None,
                        smape: None,
                        seconds,
                    }
                }
            }
        })
        .collect();
    BenchmarkReport { plan: plan.clone(), splits, seasonal_period }
}

/// Default minimum training length: two cycles of the longest configured
/// seasonality, or two seasonal periods of the frequency without any.
pub fn default_min_train(config: &ForecastConfig, ts: &TimeSeries) -> usize {
    let step = ts.freq().nominal_seconds();
    config
        .seasonality
        .iter()
        .map(|s| (2.0 * s.period.approx_seconds(ts.freq()) / step).ceil() as usize)
        .max()
        .unwrap_or(2 * ts.freq().seasonal_period())
        .max(2)
}
