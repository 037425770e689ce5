//! The conditional mean model: configuration, fitting, multi-step
//! prediction with recursive autoregression, component decomposition and
//! model summaries.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::changepoint::{
    detect_seasonality_changepoints, detect_trend_changepoints, ChangepointError, ChangepointSet, DetectionConfig,
};
use crate::features::{
    ComponentGroup, DesignLayout, EventSpec, FeatureConfig, FeatureError, GrowthFunction, GrowthSpec,
    InteractionSpec, LagSpec, RegressorMode, RegressorSpec, RowInputs, SeasonalPeriod, SeasonalitySpec, TimeFeature,
};
use crate::holidays::HolidayCalendar;
use crate::series::{
    dates_only, format_timestamp, impute_linear, mask_anomalies, AnomalyWindow, Frequency, FrequencyUnit,
    SeriesError, TimeSeries, Timestamp,
};
use crate::solvers::{fit_ols, fit_quantile, fit_ridge, predict_linear, FitMethod, LinearFit, SolverError};
use crate::stats::stable_mean;
use crate::volatility::{
    calendar_rows, fit_volatility, parse_features, VolatilityError, VolatilityMethod, VolatilityTable,
    DEFAULT_MIN_GROUP_SIZE,
};

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("no future values for regressor `{0}`")]
    MissingRegressorFuture(String),
    #[error("regressor `{0}` is not in the input")]
    RegressorMissing(String),
    #[error("forecast horizon must be at least 1")]
    HorizonNonPositive,
    #[error("{rows} usable rows, need at least {needed}")]
    InsufficientHistory { rows: usize, needed: usize },
    #[error("invalid forecast config: {0}")]
    InvalidConfig(String),
    #[error("prediction inputs missing for column(s) {0}")]
    MissingInputs(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Changepoint(#[from] ChangepointError),
    #[error(transparent)]
    Volatility(#[from] VolatilityError),
}

/// Default ridge penalty grid, chosen by rolling-origin cross-validation.
pub const RIDGE_CV_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_SIMULATION_PATHS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum FitSpec {
    Ols,
    /// Fixed penalty.
    Ridge(f64),
    /// Penalty picked from the grid by 3-fold rolling-origin CV.
    RidgeCv(Vec<f64>),
    Quantile { q: f64, lambda: f64 },
}

impl Default for FitSpec {
    fn default() -> Self {
        FitSpec::RidgeCv(RIDGE_CV_GRID.to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArMode {
    /// Chain predicted means into lags that reach past the history.
    #[default]
    Plugin,
    /// Average `paths` sample paths with residuals resampled from the
    /// volatility groups.
    Simulate { paths: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthConfig {
    pub func: GrowthFunction,
    /// Manual trend changepoints.
    pub changepoints: Vec<Timestamp>,
    /// Add automatically detected trend changepoints.
    pub auto: bool,
}

impl GrowthConfig {
    pub fn linear() -> Self {
        Self { func: GrowthFunction::Linear, changepoints: Vec::new(), auto: false }
    }

    pub fn auto_linear() -> Self {
        Self { auto: true, ..Self::linear() }
    }
}

/// Holiday events drawn from a [`HolidayCalendar`].
#[derive(Debug, Clone, PartialEq)]
pub struct HolidayConfig {
    /// Countries to include; empty means all in the calendar.
    pub countries: Vec<String>,
    pub pre_days: u32,
    pub post_days: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    HourlyShort,
    DailyLong,
    DailyShort,
    Monthly,
}

impl Template {
    pub const ALL: [Template; 4] = [Template::HourlyShort, Template::DailyLong, Template::DailyShort, Template::Monthly];

    pub fn name(&self) -> &'static str {
        match self {
            Template::HourlyShort => "hourly_short",
            Template::DailyLong => "daily_long",
            Template::DailyShort => "daily_short",
            Template::Monthly => "monthly",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Template used when none is named: `hourly_short` for sub-daily data,
    /// `daily_short` for daily, `monthly` for anything coarser.
    pub fn default_for(freq: Frequency) -> Self {
        if freq.is_subdaily() {
            Template::HourlyShort
        } else if freq.unit() == FrequencyUnit::Day && freq.multiple() == 1 {
            Template::DailyShort
        } else {
            Template::Monthly
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastConfig {
    pub growth: Option<GrowthConfig>,
    pub seasonality: Vec<SeasonalitySpec>,
    /// Detect seasonality changepoints for every configured period.
    pub auto_seasonality_changepoints: bool,
    pub events: Vec<EventSpec>,
    pub holidays: Option<HolidayConfig>,
    pub time_features: Vec<TimeFeature>,
    pub lags: LagSpec,
    pub regressors: Vec<RegressorSpec>,
    pub interactions: Vec<InteractionSpec>,
    pub fit: FitSpec,
    pub anomalies: Vec<AnomalyWindow>,
    pub horizon: usize,
    pub coverage: f64,
    pub volatility_features: Vec<String>,
    pub volatility_method: VolatilityMethod,
    pub min_group_size: usize,
    pub ar_mode: ArMode,
    /// Detection settings; `None` uses the defaults for the frequency.
    pub detection: Option<DetectionConfig>,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            growth: None,
            seasonality: Vec::new(),
            auto_seasonality_changepoints: false,
            events: Vec::new(),
            holidays: None,
            time_features: Vec::new(),
            lags: LagSpec::default(),
            regressors: Vec::new(),
            interactions: Vec::new(),
            fit: FitSpec::default(),
            anomalies: Vec::new(),
            horizon: 1,
            coverage: 0.95,
            volatility_features: Vec::new(),
            volatility_method: VolatilityMethod::default(),
            min_group_size: DEFAULT_MIN_GROUP_SIZE,
            ar_mode: ArMode::default(),
            detection: None,
        }
    }
}

impl ForecastConfig {
    pub fn template(t: Template) -> Self {
        let season = |p, m| SeasonalitySpec::new(p, m);
        let us_holidays = HolidayConfig { countries: vec!["US".into()], pre_days: 2, post_days: 2 };
        match t {
            Template::HourlyShort => Self {
                growth: Some(GrowthConfig::linear()),
                seasonality: vec![season(SeasonalPeriod::Daily, 8), season(SeasonalPeriod::Weekly, 4)],
                lags: LagSpec { lags: vec![1, 2, 24], agg_lags: vec![vec![24, 48, 168]] },
                volatility_features: vec!["dow".into(), "hour".into()],
                ..Self::default()
            },
            Template::DailyLong => Self {
                growth: Some(GrowthConfig::auto_linear()),
                seasonality: vec![season(SeasonalPeriod::Weekly, 4), season(SeasonalPeriod::Yearly, 15)],
                holidays: Some(us_holidays),
                volatility_features: vec!["dow".into()],
                ..Self::default()
            },
            Template::DailyShort => Self {
                lags: LagSpec { lags: vec![1, 7], agg_lags: vec![vec![7, 14, 21]] },
                ..Self::template(Template::DailyLong)
            },
            Template::Monthly => Self {
                growth: Some(GrowthConfig::auto_linear()),
                seasonality: vec![season(SeasonalPeriod::Yearly, 6)],
                ..Self::default()
            },
        }
    }

    pub fn for_frequency(freq: Frequency) -> Self {
        Self::template(Template::default_for(freq))
    }

    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.horizon == 0 {
            return Err(ForecastError::HorizonNonPositive);
        }
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            return Err(ForecastError::InvalidConfig(format!("coverage {} is outside (0, 1)", self.coverage)));
        }
        if let ArMode::Simulate { paths: 0, .. } = self.ar_mode {
            return Err(ForecastError::InvalidConfig("simulate mode needs at least one path".into()));
        }
        match &self.fit {
            FitSpec::Ridge(l) if !(*l >= 0.0) => {
                return Err(ForecastError::InvalidConfig(format!("ridge lambda {l} must be >= 0")))
            }
            FitSpec::RidgeCv(grid) if grid.is_empty() || grid.iter().any(|l| !(*l >= 0.0)) => {
                return Err(ForecastError::InvalidConfig("ridge grid must be non-empty and >= 0".into()))
            }
            FitSpec::Quantile { q, lambda } if !(*q > 0.0 && *q < 1.0) || !(*lambda >= 0.0) => {
                return Err(ForecastError::InvalidConfig(format!("quantile q={q} lambda={lambda} out of range")))
            }
            _ => {}
        }
        parse_features(&self.volatility_features)?;
        if let Some(d) = &self.detection {
            d.validate()?;
        }
        Ok(())
    }
}

/// A fitted model, ready to forecast from the end of its training data.
#[derive(Debug, Clone)]
pub struct FittedForecastModel {
    pub config: ForecastConfig,
    pub fit: LinearFit,
    pub changepoints: ChangepointSet,
    pub volatility: VolatilityTable,
    /// Training residuals on the grid; `NaN` where the row was not fit.
    pub residuals: Vec<f64>,
    /// The λ picked by cross-validation, when the fit used a grid.
    pub chosen_lambda: Option<f64>,
    layout: DesignLayout,
    history: TimeSeries,
    y: Vec<f64>,
    regressors: Vec<Vec<f64>>,
    coefficients: Vec<f64>,
}

/// Per-group additive contributions; they sum to the forecast.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComponentBreakdown {
    pub timestamps: Vec<Timestamp>,
    pub intercept: Vec<f64>,
    pub trend: Vec<f64>,
    pub seasonality: BTreeMap<String, Vec<f64>>,
    pub events: Vec<f64>,
    pub autoregression: Vec<f64>,
    pub regressors: Vec<f64>,
    pub interactions: Vec<f64>,
}

impl ComponentBreakdown {
    fn zeros(timestamps: Vec<Timestamp>, tags: &[String]) -> Self {
        let n = timestamps.len();
        Self {
            timestamps,
            intercept: vec![0.0; n],
            trend: vec![0.0; n],
            seasonality: tags.iter().map(|t| (t.clone(), vec![0.0; n])).collect(),
            events: vec![0.0; n],
            autoregression: vec![0.0; n],
            regressors: vec![0.0; n],
            interactions: vec![0.0; n],
        }
    }

    fn slot(&mut self, group: &ComponentGroup) -> &mut Vec<f64> {
        match group {
            ComponentGroup::Intercept => &mut self.intercept,
            ComponentGroup::Trend => &mut self.trend,
            ComponentGroup::Seasonality(tag) => self.seasonality.get_mut(tag).expect("tag registered"),
            ComponentGroup::Events => &mut self.events,
            ComponentGroup::Autoregression => &mut self.autoregression,
            ComponentGroup::Regressors => &mut self.regressors,
            ComponentGroup::Interactions => &mut self.interactions,
        }
    }

    fn blank(&mut self, i: usize) {
        for v in [&mut self.intercept, &mut self.trend, &mut self.events, &mut self.autoregression] {
            v[i] = f64::NAN;
        }
        self.regressors[i] = f64::NAN;
        self.interactions[i] = f64::NAN;
        for v in self.seasonality.values_mut() {
            v[i] = f64::NAN;
        }
    }

    fn all(&self) -> Vec<&Vec<f64>> {
        let mut v = vec![&self.intercept, &self.trend];
        v.extend(self.seasonality.values());
        v.extend([&self.events, &self.autoregression, &self.regressors, &self.interactions]);
        v
    }

    /// Sum over all groups.
    pub fn total(&self) -> Vec<f64> {
        let groups = self.all();
        (0..self.timestamps.len()).map(|i| groups.iter().map(|g| g[i]).sum()).collect()
    }

    /// `ts,intercept,trend,seasonality_<tag>...,events,autoregression,regressors,interactions,forecast`.
    pub fn to_csv(&self, date_only: bool) -> String {
        let mut s = String::from("ts,intercept,trend");
        for tag in self.seasonality.keys() {
            let _ = write!(s, ",seasonality_{tag}");
        }
        s.push_str(",events,autoregression,regressors,interactions,forecast\n");
        let total = self.total();
        let groups = self.all();
        for (i, ts) in self.timestamps.iter().enumerate() {
            s.push_str(&format_timestamp(*ts, date_only));
            for g in &groups {
                let _ = write!(s, ",{}", g[i]);
            }
            let _ = writeln!(s, ",{}", total[i]);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastResult {
    pub timestamps: Vec<Timestamp>,
    pub forecast: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub components: ComponentBreakdown,
}

impl ForecastResult {
    /// `ts,forecast,lower,upper`.
    pub fn to_csv(&self, date_only: bool) -> String {
        let mut s = String::from("ts,forecast,lower,upper\n");
        for i in 0..self.timestamps.len() {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                format_timestamp(self.timestamps[i], date_only),
                self.forecast[i],
                self.lower[i],
                self.upper[i]
            );
        }
        s
    }
}

/// Coefficient table with OLS inference where available.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub loss: f64,
    pub rows: Vec<SummaryRow>,
    pub changepoints: Vec<Timestamp>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub coefficient: f64,
    /// `(stderr, t, p)`; `None` for penalized or quantile fits.
    pub inference: Option<(f64, f64, f64)>,
}

impl fmt::Display for ModelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method: {}", self.method)?;
        writeln!(f, "n: {}", self.n)?;
        writeln!(f, "p: {}", self.p)?;
        writeln!(f, "loss: {}", self.loss)?;
        let cps: Vec<String> = self.changepoints.iter().map(|t| t.to_string()).collect();
        writeln!(f, "trend changepoints: {}", if cps.is_empty() { "none".to_string() } else { cps.join(", ") })?;
        writeln!(f)?;
        writeln!(f, "{:<32} {:>16} {:>14} {:>10} {:>12}", "term", "coefficient", "stderr", "t", "p")?;
        for r in &self.rows {
            match r.inference {
                Some((se, t, p)) => {
                    writeln!(f, "{:<32} {:>16.6e} {:>14.4e} {:>10.3} {:>12.4e}", r.name, r.coefficient, se, t, p)?
                }
                None => writeln!(f, "{:<32} {:>16.6e} {:>14} {:>10} {:>12}", r.name, r.coefficient, "n/a", "n/a", "n/a")?,
            }
        }
        Ok(())
    }
}

/// Fits with the builtin holiday calendar and no regressors.
pub fn fit(ts: &TimeSeries, config: &ForecastConfig) -> Result<FittedForecastModel, ForecastError> {
    fit_with(ts, &[], config, &HolidayCalendar::builtin())
}

/// Fits the model. `regressors` are aligned to the series grid.
pub fn fit_with(
    ts: &TimeSeries,
    regressors: &[(String, Vec<Option<f64>>)],
    config: &ForecastConfig,
    holidays: &HolidayCalendar,
) -> Result<FittedForecastModel, ForecastError> {
    config.validate()?;
    let n = ts.len();
    let masked = mask_anomalies(ts, &config.anomalies);
    let imputed = impute_linear(&masked)?;
    let y = imputed.values();

    let detection = config.detection.clone().unwrap_or_else(|| DetectionConfig::for_frequency(ts.freq()));
    let mut changepoints = ChangepointSet { trend: Vec::new(), seasonality: BTreeMap::new(), n_candidates: 0 };
    let mut growth = None;
    let mut trend_detection = None;
    if let Some(g) = &config.growth {
        let mut cps = g.changepoints.clone();
        if g.auto {
            match detect_trend_changepoints(&masked, &detection) {
                Ok(det) => {
                    changepoints.trend = det.changepoints.clone();
                    changepoints.n_candidates = det.n_candidates;
                    cps.extend(det.timestamps());
                    trend_detection = Some(det);
                }
                Err(ChangepointError::TooShort { len, needed }) => {
                    log::warn!("series too short for changepoint detection ({len} < {needed}); none added");
                }
                Err(e) => return Err(e.into()),
            }
        }
        cps.sort();
        cps.dedup();
        growth = Some(GrowthSpec { func: g.func, changepoints: cps });
    }

    let mut seasonality = config.seasonality.clone();
    if config.auto_seasonality_changepoints && !seasonality.is_empty() {
        let det = match trend_detection {
            Some(d) => d,
            None => detect_trend_changepoints(&masked, &detection)?,
        };
        let found = detect_seasonality_changepoints(&masked, &det, &seasonality, &detection)?;
        for spec in &mut seasonality {
            if let Some(cps) = found.get(&spec.period.tag()) {
                spec.changepoints.extend(cps.iter().map(|c| c.ts));
                spec.changepoints.sort();
                spec.changepoints.dedup();
            }
        }
        changepoints.seasonality = found;
    }

    let mut events = config.events.clone();
    if let Some(h) = &config.holidays {
        events.extend(holidays.events(&h.countries, h.pre_days, h.post_days));
    }
    let features = FeatureConfig {
        growth,
        seasonality,
        events,
        time_features: config.time_features.clone(),
        lags: config.lags.clone(),
        regressors: config.regressors.clone(),
        interactions: config.interactions.clone(),
    };
    let layout = DesignLayout::new(&features, ts.start(), ts.end(), ts.freq())?;

    let regs = config
        .regressors
        .iter()
        .map(|spec| {
            regressors
                .iter()
                .find(|(name, _)| *name == spec.name)
                .map(|(_, v)| (0..n).map(|i| v.get(i).copied().flatten().unwrap_or(f64::NAN)).collect::<Vec<f64>>())
                .ok_or_else(|| ForecastError::RegressorMissing(spec.name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let design = layout.matrix(0..n, &RowInputs { y: &y, regressors: &regs });
    let usable: Vec<bool> = design.usable().iter().zip(&imputed.imputed).map(|(u, imp)| *u && !imp).collect();
    let rows = usable.iter().filter(|u| **u).count();
    let design = design.with_usable(usable);

    let needed = match config.fit {
        FitSpec::Ols | FitSpec::Quantile { .. } => layout.ncols(),
        FitSpec::Ridge(_) | FitSpec::RidgeCv(_) => 10,
    };
    if rows < needed {
        return Err(ForecastError::InsufficientHistory { rows, needed });
    }

    let mut chosen_lambda = None;
    let linear = match &config.fit {
        FitSpec::Ols => fit_ols(&design, &y)?,
        FitSpec::Ridge(l) => fit_ridge(&design, &y, *l)?,
        FitSpec::RidgeCv(grid) => {
            let l = ridge_cv(&design, &y, grid)?;
            chosen_lambda = Some(l);
            fit_ridge(&design, &y, l)?
        }
        FitSpec::Quantile { q, lambda } => fit_quantile(&design, &y, *q, *lambda)?,
    };

    let mut residuals = vec![f64::NAN; n];
    for (&row, r) in linear.rows.iter().zip(&linear.residuals) {
        residuals[row] = *r;
    }
    let vol_features = parse_features(&config.volatility_features)?;
    let fit_rows: Vec<usize> = linear.rows.clone();
    let stamps: Vec<Timestamp> = fit_rows.iter().map(|&i| ts.timestamp(i)).collect();
    let volatility = fit_volatility(
        &linear.residuals,
        &calendar_rows(&vol_features, &stamps),
        &config.volatility_features,
        config.min_group_size,
        config.volatility_method,
    )?;

    let mut coefficients = vec![if linear.has_intercept { linear.intercept } else { 0.0 }];
    let names = layout.names();
    for name in &names[1..] {
        coefficients.push(linear.coefficient(name).unwrap_or(0.0));
    }

    Ok(FittedForecastModel {
        config: config.clone(),
        fit: linear,
        changepoints,
        volatility,
        residuals,
        chosen_lambda,
        layout,
        history: imputed.series,
        y,
        regressors: regs,
        coefficients,
    })
}

/// Picks λ from `grid` by 3-fold rolling-origin CV over the usable rows:
/// the last 30% of rows form three consecutive test blocks, each scored
/// by a fit on all rows before it. Ties go to the larger λ.
fn ridge_cv(design: &crate::features::DesignMatrix, y: &[f64], grid: &[f64]) -> Result<f64, ForecastError> {
    let rows = design.usable_rows();
    let block = rows.len() / 10;
    if grid.len() == 1 || block == 0 || rows.len() - 3 * block < 10 {
        return Ok(grid[grid.len() / 2]);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut best = (f64::INFINITY, sorted[0]);
    for &lambda in &sorted {
        let mut sse = 0.0;
        for k in (1..=3).rev() {
            let split = rows.len() - k * block;
            let mut usable = vec![false; design.nrows()];
            rows[..split].iter().for_each(|&r| usable[r] = true);
            let train = design.clone().with_usable(usable);
            let fit = fit_ridge(&train, y, lambda)?;
            let test = design.select_rows(&rows[split..split + block]);
            let pred = predict_linear(&fit, &test)?;
            sse += rows[split..split + block].iter().zip(&pred).map(|(&r, p)| (y[r] - p).powi(2)).sum::<f64>();
        }
        if sse < best.0 {
            best = (sse, lambda);
        }
    }
    Ok(best.1)
}

impl FittedForecastModel {
    pub fn layout(&self) -> &DesignLayout {
        &self.layout
    }

    /// The training series after anomaly masking and imputation.
    pub fn history(&self) -> &TimeSeries {
        &self.history
    }

    /// Coefficients in design column order, intercept first.
    pub fn coefficients(&self) -> BTreeMap<String, f64> {
        self.layout.names().into_iter().zip(self.coefficients.iter().copied()).collect()
    }

    fn tags(&self) -> Vec<String> {
        let mut tags: Vec<String> = self
            .layout
            .groups()
            .into_iter()
            .filter_map(|g| match g {
                ComponentGroup::Seasonality(t) => Some(t),
                _ => None,
            })
            .collect();
        tags.sort();
        tags.dedup();
        tags
    }

    fn add_components(&self, out: &mut ComponentBreakdown, i: usize, row: &[f64]) {
        for ((g, c), x) in self.layout.groups().iter().zip(&self.coefficients).zip(row) {
            out.slot(g)[i] += c * x;
        }
    }

    /// Component contributions over the training grid (`NaN` on rows whose
    /// inputs are incomplete, such as lag warm-up rows).
    pub fn decompose_history(&self) -> ComponentBreakdown {
        let n = self.y.len();
        let inputs = RowInputs { y: &self.y, regressors: &self.regressors };
        let mut out = ComponentBreakdown::zeros(self.history.timestamps(), &self.tags());
        for i in 0..n {
            let row = self.layout.row(i, &inputs);
            if row.iter().any(|v| v.is_nan()) {
                out.blank(i);
                continue;
            }
            self.add_components(&mut out, i, &row);
        }
        out
    }

    /// Fitted values on the training grid (sum of the components).
    pub fn fitted_history(&self) -> Vec<f64> {
        self.decompose_history().total()
    }

    fn future_regressors(
        &self,
        horizon: usize,
        future: &[(String, Vec<f64>)],
    ) -> Result<Vec<Vec<f64>>, ForecastError> {
        self.config
            .regressors
            .iter()
            .zip(&self.regressors)
            .map(|(spec, hist)| {
                let needed = match spec.mode {
                    RegressorMode::FutureProvided => horizon,
                    RegressorMode::Lagged => horizon.saturating_sub(spec.lag),
                };
                let supplied = future.iter().find(|(n, _)| *n == spec.name).map(|(_, v)| v.as_slice()).unwrap_or(&[]);
                if supplied.len() < needed || supplied[..needed].iter().any(|v| !v.is_finite()) {
                    return Err(ForecastError::MissingRegressorFuture(spec.name.clone()));
                }
                let mut ext = hist.clone();
                ext.extend_from_slice(&supplied[..needed]);
                ext.resize(hist.len() + horizon, f64::NAN);
                Ok(ext)
            })
            .collect()
    }

    fn future_row(&self, i: usize, y: &[f64], regs: &[Vec<f64>]) -> Result<Vec<f64>, ForecastError> {
        let row = self.layout.row(i, &RowInputs { y, regressors: regs });
        if row.iter().any(|v| v.is_nan()) {
            let names = self.layout.names();
            let missing: Vec<&str> =
                row.iter().zip(&names).filter(|(v, _)| v.is_nan()).map(|(_, n)| n.as_str()).collect();
            return Err(ForecastError::MissingInputs(missing.join(", ")));
        }
        Ok(row)
    }

    fn dot(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, c)| x * c).sum()
    }

    /// Runs one recursive path. `draw` supplies the residual added to the
    /// predicted mean at each step before it is fed back into the lags.
    fn run_path(
        &self,
        horizon: usize,
        regs: &[Vec<f64>],
        mut draw: impl FnMut(usize) -> f64,
    ) -> Result<(Vec<f64>, ComponentBreakdown), ForecastError> {
        let n = self.y.len();
        let mut y = self.y.clone();
        y.resize(n + horizon, f64::NAN);
        let stamps = self.history.future_timestamps(horizon);
        let mut comps = ComponentBreakdown::zeros(stamps, &self.tags());
        let mut means = Vec::with_capacity(horizon);
        for h in 0..horizon {
            let i = n + h;
            let row = self.future_row(i, &y, regs)?;
            let mean = self.dot(&row);
            self.add_components(&mut comps, h, &row);
            means.push(mean);
            y[i] = mean + draw(h);
        }
        Ok((means, comps))
    }

    /// Forecasts `horizon` steps past the training end.
    pub fn predict(&self, horizon: usize, future_regressors: &[(String, Vec<f64>)]) -> Result<ForecastResult, ForecastError> {
        if horizon == 0 {
            return Err(ForecastError::HorizonNonPositive);
        }
        let regs = self.future_regressors(horizon, future_regressors)?;
        let needs_simulation = self.config.lags.min_order().is_some_and(|m| m < horizon);
        let (forecast, components) = match self.config.ar_mode {
            ArMode::Simulate { paths, seed } if needs_simulation => self.simulate(horizon, &regs, paths, seed)?,
            _ => self.run_path(horizon, &regs, |_| 0.0)?,
        };
        let stamps = self.history.future_timestamps(horizon);
        let features = parse_features(&self.config.volatility_features)?;
        let (lower, upper) =
            self.volatility.predict_interval(&forecast, &calendar_rows(&features, &stamps), self.config.coverage)?;
        Ok(ForecastResult { timestamps: stamps, forecast, lower, upper, components })
    }

    fn simulate(
        &self,
        horizon: usize,
        regs: &[Vec<f64>],
        paths: usize,
        seed: u64,
    ) -> Result<(Vec<f64>, ComponentBreakdown), ForecastError> {
        let stamps = self.history.future_timestamps(horizon);
        let features = parse_features(&self.config.volatility_features)?;
        let keys = calendar_rows(&features, &stamps);
        let pools: Vec<&[f64]> = keys.iter().map(|k| self.volatility.resolve(k).sorted.as_slice()).collect();
        let runs = (0..paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(p as u64);
                self.run_path(horizon, regs, |h| pools[h][rng.random_range(0..pools[h].len())])
            })
            .collect::<Result<Vec<_>, _>>()?;
        let per_step = |get: &dyn Fn(&(Vec<f64>, ComponentBreakdown)) -> &Vec<f64>| -> Vec<f64> {
            (0..horizon).map(|h| stable_mean(&runs.iter().map(|r| get(r)[h]).collect::<Vec<_>>())).collect()
        };
        let forecast = per_step(&|r| &r.0);
        let mut comps = ComponentBreakdown::zeros(stamps, &self.tags());
        comps.intercept = per_step(&|r| &r.1.intercept);
        comps.trend = per_step(&|r| &r.1.trend);
        for tag in self.tags() {
            comps.seasonality.insert(tag.clone(), per_step(&|r| &r.1.seasonality[&tag]));
        }
        comps.events = per_step(&|r| &r.1.events);
        comps.autoregression = per_step(&|r| &r.1.autoregression);
        comps.regressors = per_step(&|r| &r.1.regressors);
        comps.interactions = per_step(&|r| &r.1.interactions);
        Ok((forecast, comps))
    }

    pub fn summarize(&self) -> ModelSummary {
        let inference = self.fit.inference.as_ref().filter(|_| matches!(self.fit.method, FitMethod::Ols));
        let mut rows = Vec::with_capacity(self.layout.ncols());
        for (j, (name, coef)) in self.layout.names().into_iter().zip(&self.coefficients).enumerate() {
            let stat = inference.and_then(|inf| {
                if j == 0 {
                    inf.intercept
                } else {
                    self.fit.names.iter().position(|n| *n == name).map(|k| inf.coefficients[k])
                }
            });
            rows.push(SummaryRow {
                name,
                coefficient: *coef,
                inference: stat.filter(|s| s.stderr.is_finite()).map(|s| (s.stderr, s.t, s.p)),
            });
        }
        ModelSummary {
            method: self.fit.method.label(),
            n: self.fit.n,
            p: self.fit.p,
            loss: self.fit.loss,
            rows,
            changepoints: self.changepoints.trend.iter().map(|c| c.ts).collect(),
        }
    }

    /// Whether output timestamps are plain dates.
    pub fn dates_only(&self) -> bool {
        dates_only(&self.history)
    }
}
