//! Python bindings: series construction, model fitting and forecasting,
//! changepoint detection, backtests and metrics.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use silverkite::changepoint::{detect_changepoints as detect, DetectionConfig};
use silverkite::cli::{config_from_entries, seasonality_overlay as overlay};
use silverkite::evaluate::{self, make_rolling_splits, run_backtest, ModelForecaster, Window};
use silverkite::features::{SeasonalPeriod, SeasonalitySpec};
use silverkite::forecast::{self, ForecastResult};
use silverkite::series::{dates_only, format_timestamp, parse_timestamp, Frequency};

fn err(e: impl Into<silverkite::Error>) -> PyErr {
    let e = e.into();
    PyValueError::new_err(format!("{}: {e}", e.code()))
}

fn parse_freq(s: &str) -> PyResult<Frequency> {
    Frequency::parse(s).ok_or_else(|| PyValueError::new_err(format!("unknown frequency `{s}`")))
}

fn parse_period(s: &str) -> PyResult<SeasonalPeriod> {
    SeasonalPeriod::from_tag(s).ok_or_else(|| PyValueError::new_err(format!("unknown seasonal period `{s}`")))
}

/// A regular time series; missing values are `None`.
#[pyclass(frozen)]
pub struct TimeSeries {
    inner: silverkite::TimeSeries,
}

#[pymethods]
impl TimeSeries {
    #[new]
    fn new(start: &str, freq: &str, values: Vec<Option<f64>>) -> PyResult<Self> {
        let start = parse_timestamp(start).ok_or_else(|| PyValueError::new_err(format!("bad timestamp `{start}`")))?;
        let inner = silverkite::TimeSeries::new(start, parse_freq(freq)?, values).map_err(err)?;
        Ok(Self { inner })
    }

    /// Reads a `ts,y[,...]` CSV; extra columns are ignored.
    #[staticmethod]
    #[pyo3(signature = (path, freq=None))]
    fn from_csv(path: &str, freq: Option<&str>) -> PyResult<Self> {
        let freq = freq.map(parse_freq).transpose()?;
        let frame = silverkite::series::read_csv(std::path::Path::new(path), freq).map_err(err)?;
        Ok(Self { inner: frame.series })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "TimeSeries(start={}, freq={:?}, len={})",
            format_timestamp(self.inner.start(), false),
            self.inner.freq(),
            self.inner.len()
        )
    }

    fn values(&self) -> Vec<Option<f64>> {
        self.inner.values().to_vec()
    }

    fn timestamps(&self) -> Vec<String> {
        let d = dates_only(&self.inner);
        self.inner.timestamps().into_iter().map(|t| format_timestamp(t, d)).collect()
    }

    /// Sub-series `[start, end)` by position.
    fn slice(&self, start: usize, end: usize) -> PyResult<Self> {
        if start >= end || end > self.inner.len() {
            return Err(PyValueError::new_err(format!("bad range {start}..{end} for length {}", self.inner.len())));
        }
        Ok(Self { inner: self.inner.slice(start..end) })
    }
}

/// Model configuration from config-file keys, e.g.
/// `ForecastConfig({"template": "daily_long", "horizon": "30"}, freq="day")`.
#[pyclass(frozen)]
pub struct ForecastConfig {
    inner: silverkite::ForecastConfig,
}

#[pymethods]
impl ForecastConfig {
    #[new]
    #[pyo3(signature = (options=None, freq="day"))]
    fn new(options: Option<BTreeMap<String, String>>, freq: &str) -> PyResult<Self> {
        let inner = config_from_entries(options.unwrap_or_default(), parse_freq(freq)?).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[getter]
    fn coverage(&self) -> f64 {
        self.inner.coverage
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Point forecast, interval and per-component breakdown.
#[pyclass(frozen, get_all)]
pub struct Forecast {
    timestamps: Vec<String>,
    forecast: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    components: BTreeMap<String, Vec<f64>>,
}

impl Forecast {
    fn from_result(r: ForecastResult, date_only: bool) -> Self {
        let c = &r.components;
        let mut components = BTreeMap::new();
        components.insert("intercept".to_string(), c.intercept.clone());
        components.insert("trend".to_string(), c.trend.clone());
        for (tag, v) in &c.seasonality {
            components.insert(format!("seasonality_{tag}"), v.clone());
        }
        components.insert("events".to_string(), c.events.clone());
        components.insert("autoregression".to_string(), c.autoregression.clone());
        components.insert("regressors".to_string(), c.regressors.clone());
        components.insert("interactions".to_string(), c.interactions.clone());
        Self {
            timestamps: r.timestamps.iter().map(|t| format_timestamp(*t, date_only)).collect(),
            forecast: r.forecast,
            lower: r.lower,
            upper: r.upper,
            components,
        }
    }
}

#[pyclass(frozen)]
pub struct FittedModel {
    inner: forecast::FittedForecastModel,
}

#[pymethods]
impl FittedModel {
    fn predict(&self, horizon: usize) -> PyResult<Forecast> {
        let r = self.inner.predict(horizon, &[]).map_err(err)?;
        Ok(Forecast::from_result(r, self.inner.dates_only()))
    }

    /// Coefficients keyed by design column name.
    fn coefficients(&self) -> BTreeMap<String, f64> {
        self.inner.coefficients()
    }

    fn summary(&self) -> String {
        self.inner.summarize().to_string()
    }

    fn trend_changepoints(&self) -> Vec<String> {
        let d = self.inner.dates_only();
        self.inner.changepoints.trend.iter().map(|c| format_timestamp(c.ts, d)).collect()
    }

    fn fitted_values(&self) -> Vec<f64> {
        self.inner.fitted_history()
    }

    #[getter]
    fn chosen_lambda(&self) -> Option<f64> {
        self.inner.chosen_lambda
    }
}

#[pyfunction]
fn fit(ts: &TimeSeries, config: &ForecastConfig) -> PyResult<FittedModel> {
    let inner = forecast::fit(&ts.inner, &config.inner).map_err(err)?;
    Ok(FittedModel { inner })
}

/// Trend and seasonality changepoints as `{kind: [(timestamp, score)]}`;
/// the trend entry is keyed `"trend"`, seasonality entries by period tag.
#[pyfunction]
#[pyo3(signature = (ts, periods=vec!["weekly".to_string(), "yearly".to_string()], order=4))]
fn detect_changepoints(
    ts: &TimeSeries,
    periods: Vec<String>,
    order: usize,
) -> PyResult<BTreeMap<String, Vec<(String, f64)>>> {
    let specs = periods
        .iter()
        .map(|p| Ok(SeasonalitySpec::new(parse_period(p)?, order)))
        .collect::<PyResult<Vec<_>>>()?;
    let cfg = DetectionConfig::for_frequency(ts.inner.freq());
    let (trend, set) = detect(&ts.inner, &specs, &cfg).map_err(err)?;
    let d = dates_only(&ts.inner);
    let rows = |cps: &[silverkite::changepoint::Changepoint]| cps.iter().map(|c| (format_timestamp(c.ts, d), c.score)).collect();
    let mut out = BTreeMap::new();
    out.insert("trend".to_string(), rows(&trend.changepoints));
    for (tag, cps) in &set.seasonality {
        out.insert(tag.clone(), rows(cps));
    }
    Ok(out)
}

/// Rolling-origin backtest with an expanding window; returns aggregate
/// metrics plus the failed split count.
#[pyfunction]
#[pyo3(signature = (ts, config, horizon=1, k=10, period=1, min_train=None))]
fn backtest(
    ts: &TimeSeries,
    config: &ForecastConfig,
    horizon: usize,
    k: usize,
    period: usize,
    min_train: Option<usize>,
) -> PyResult<BTreeMap<String, f64>> {
    let min_train = min_train.unwrap_or_else(|| evaluate::default_min_train(&config.inner, &ts.inner));
    let plan = make_rolling_splits(ts.inner.len(), horizon, period, k, Window::Expanding, min_train).map_err(err)?;
    let mut cfg = config.inner.clone();
    cfg.horizon = horizon;
    let report = run_backtest(&ts.inner, &ModelForecaster::new(cfg), &plan, ts.inner.freq().seasonal_period());
    let mut out = BTreeMap::new();
    for (name, v) in [("mase", report.mase()), ("mape", report.mape()), ("smape", report.smape())] {
        out.insert(name.to_string(), v.unwrap_or(f64::NAN));
    }
    out.insert("n_failed".to_string(), report.n_failed() as f64);
    out.insert("seconds".to_string(), report.total_seconds());
    Ok(out)
}

#[pyfunction]
fn mase(train: Vec<Option<f64>>, actual: Vec<Option<f64>>, forecast: Vec<f64>, m: usize) -> PyResult<f64> {
    evaluate::mase(&train, &actual, &forecast, m).map_err(|e| err(evaluate::EvaluateError::from(e)))
}

#[pyfunction]
fn mape(actual: Vec<Option<f64>>, forecast: Vec<f64>) -> PyResult<f64> {
    evaluate::mape(&actual, &forecast).map_err(|e| err(evaluate::EvaluateError::from(e)))
}

#[pyfunction]
fn smape(actual: Vec<Option<f64>>, forecast: Vec<f64>) -> PyResult<f64> {
    evaluate::smape(&actual, &forecast).map_err(|e| err(evaluate::EvaluateError::from(e)))
}

/// `(cycle_position, group_label, mean_value)` rows for a seasonal period.
#[pyfunction]
fn seasonality_overlay(ts: &TimeSeries, period: &str) -> PyResult<Vec<(f64, String, f64)>> {
    Ok(overlay(&ts.inner, parse_period(period)?))
}

#[pyfunction]
fn peyton_manning() -> TimeSeries {
    TimeSeries { inner: silverkite::datasets::peyton_manning() }
}

#[pyfunction]
fn bike_sharing() -> TimeSeries {
    TimeSeries { inner: silverkite::datasets::bike_sharing() }
}

#[pymodule]
fn pysilverkite(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<TimeSeries>()?;
    m.add_class::<ForecastConfig>()?;
    m.add_class::<FittedModel>()?;
    m.add_class::<Forecast>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(detect_changepoints, m)?)?;
    m.add_function(wrap_pyfunction!(backtest, m)?)?;
    m.add_function(wrap_pyfunction!(mase, m)?)?;
    m.add_function(wrap_pyfunction!(mape, m)?)?;
    m.add_function(wrap_pyfunction!(smape, m)?)?;
    m.add_function(wrap_pyfunction!(seasonality_overlay, m)?)?;
    m.add_function(wrap_pyfunction!(peyton_manning, m)?)?;
    m.add_function(wrap_pyfunction!(bike_sharing, m)?)?;
    Ok(())
}
