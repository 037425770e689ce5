use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use super::events::event_value;
use super::interactions::resolve_pairs;
use super::lags::{avg_lag_name, avg_lag_value, lag_name, lag_value};
use super::{
    check_changepoints, fourier_value, hinge, ComponentGroup, DesignMatrix, EventSpec, FeatureError,
    GrowthFunction, GrowthSpec, InteractionSpec, LagSpec, SeasonalPeriod, SeasonalitySpec, TimeFeature,
};
use crate::series::{Frequency, TimeSeries, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressorMode {
    /// Values for the forecast period are supplied by the caller.
    FutureProvided,
    /// The regressor enters lagged by `lag` steps.
    Lagged,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegressorSpec {
    pub name: String,
    pub mode: RegressorMode,
    pub lag: usize,
}

impl RegressorSpec {
    pub fn future(name: &str) -> Self {
        Self { name: name.to_string(), mode: RegressorMode::FutureProvided, lag: 0 }
    }

    pub fn lagged(name: &str, lag: usize) -> Self {
        Self { name: name.to_string(), mode: RegressorMode::Lagged, lag }
    }

    pub fn column_name(&self) -> String {
        match self.mode {
            RegressorMode::FutureProvided => self.name.clone(),
            RegressorMode::Lagged => format!("{}_lag{}", self.name, self.lag),
        }
    }

    fn effective_lag(&self) -> usize {
        match self.mode {
            RegressorMode::FutureProvided => 0,
            RegressorMode::Lagged => self.lag,
        }
    }
}

/// Which basis functions to generate. An empty config yields only the
/// intercept column.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureConfig {
    pub growth: Option<GrowthSpec>,
    pub seasonality: Vec<SeasonalitySpec>,
    pub events: Vec<EventSpec>,
    pub time_features: Vec<TimeFeature>,
    pub lags: LagSpec,
    pub regressors: Vec<RegressorSpec>,
    pub interactions: Vec<InteractionSpec>,
}

#[derive(Debug, Clone)]
enum Source {
    Intercept,
    Growth(GrowthFunction),
    GrowthChangepoint { func: GrowthFunction, at: f64 },
    Fourier { period: SeasonalPeriod, m: usize, sin: bool },
    SeasonalityChangepoint { period: SeasonalPeriod, m: usize, sin: bool, after: Timestamp },
    Event { dates: Arc<BTreeSet<NaiveDate>>, offset: i64 },
    Time(TimeFeature),
    Lag(usize),
    AvgLag(Vec<usize>),
    Regressor { slot: usize, lag: usize },
    Interaction(Box<Source>, Box<Source>),
}

#[derive(Debug, Clone)]
struct LayoutColumn {
    name: String,
    source: Source,
    group: ComponentGroup,
}

/// Per-row data sources, indexed by grid position from the layout origin.
/// Missing values are `NaN`.
#[derive(Debug, Clone, Copy)]
pub struct RowInputs<'a> {
    pub y: &'a [f64],
    /// One series per configured regressor, in config order.
    pub regressors: &'a [Vec<f64>],
}

/// Resolved column recipe: names, groups and how to evaluate every column
/// at any grid position (training or future).
#[derive(Debug, Clone)]
pub struct DesignLayout {
    origin: Timestamp,
    freq: Frequency,
    columns: Vec<LayoutColumn>,
}

impl DesignLayout {
    /// Resolves a config into a column layout anchored at `origin` (the
    /// first training timestamp). `train_end` bounds the changepoints.
    pub fn new(
        config: &FeatureConfig,
        origin: Timestamp,
        train_end: Timestamp,
        freq: Frequency,
    ) -> Result<Self, FeatureError> {
        validate_config(config)?;
        let mut cols = vec![LayoutColumn {
            name: "intercept".into(),
            source: Source::Intercept,
            group: ComponentGroup::Intercept,
        }];

        if let Some(growth) = &config.growth {
            check_changepoints(&growth.changepoints, origin, train_end)?;
            let f = growth.func;
            cols.push(LayoutColumn {
                name: format!("growth_{}", f.name()),
                source: Source::Growth(f),
                group: ComponentGroup::Trend,
            });
            for (i, cp) in growth.changepoints.iter().enumerate() {
                cols.push(LayoutColumn {
                    name: format!("cp{}_{}", i + 1, f.name()),
                    source: Source::GrowthChangepoint { func: f, at: freq.elapsed_steps(origin, *cp) },
                    group: ComponentGroup::Trend,
                });
            }
        }

        let mut seasonality: Vec<&SeasonalitySpec> = config.seasonality.iter().collect();
        seasonality.sort_by(|a, b| a.period.approx_seconds(freq).total_cmp(&b.period.approx_seconds(freq)));
        for spec in &seasonality {
            let tag = spec.period.tag();
            for m in 1..=spec.effective_order(freq) {
                for sin in [true, false] {
                    cols.push(LayoutColumn {
                        name: format!("{}{m}_{tag}", if sin { "sin" } else { "cos" }),
                        source: Source::Fourier { period: spec.period, m, sin },
                        group: ComponentGroup::Seasonality(tag.clone()),
                    });
                }
            }
        }
        for spec in &seasonality {
            check_changepoints(&spec.changepoints, origin, train_end)?;
            let tag = spec.period.tag();
            for (k, cp) in spec.changepoints.iter().enumerate() {
                for m in 1..=spec.effective_order(freq) {
                    for sin in [true, false] {
                        cols.push(LayoutColumn {
                            name: format!("scp{}_{}{m}_{tag}", k + 1, if sin { "sin" } else { "cos" }),
                            source: Source::SeasonalityChangepoint { period: spec.period, m, sin, after: *cp },
                            group: ComponentGroup::Seasonality(tag.clone()),
                        });
                    }
                }
            }
        }

        for event in &config.events {
            let dates = Arc::new(event.dates.clone());
            for (name, offset) in event.offsets() {
                cols.push(LayoutColumn {
                    name,
                    source: Source::Event { dates: Arc::clone(&dates), offset },
                    group: ComponentGroup::Events,
                });
            }
        }

        for f in &config.time_features {
            cols.push(LayoutColumn {
                name: f.name().to_string(),
                source: Source::Time(*f),
                group: ComponentGroup::Events,
            });
        }

        for &r in &config.lags.lags {
            cols.push(LayoutColumn { name: lag_name(r), source: Source::Lag(r), group: ComponentGroup::Autoregression });
        }
        for set in &config.lags.agg_lags {
            cols.push(LayoutColumn {
                name: avg_lag_name(set),
                source: Source::AvgLag(set.clone()),
                group: ComponentGroup::Autoregression,
            });
        }

        for (slot, reg) in config.regressors.iter().enumerate() {
            cols.push(LayoutColumn {
                name: reg.column_name(),
                source: Source::Regressor { slot, lag: reg.effective_lag() },
                group: ComponentGroup::Regressors,
            });
        }

        // Interaction candidates: generated columns plus raw calendar features.
        let mut cand_names: Vec<String> = cols[1..].iter().map(|c| c.name.clone()).collect();
        let mut cand_sources: Vec<Source> = cols[1..].iter().map(|c| c.source.clone()).collect();
        for f in TimeFeature::RAW {
            if !cand_names.iter().any(|n| n == f.name()) {
                cand_names.push(f.name().to_string());
                cand_sources.push(Source::Time(f));
            }
        }
        for spec in &config.interactions {
            for (a, b) in resolve_pairs(spec, &cand_names)? {
                cols.push(LayoutColumn {
                    name: format!("{}:{}", cand_names[a], cand_names[b]),
                    source: Source::Interaction(Box::new(cand_sources[a].clone()), Box::new(cand_sources[b].clone())),
                    group: ComponentGroup::Interactions,
                });
            }
        }

        let mut seen = HashSet::new();
        if let Some(dup) = cols.iter().find(|c| !seen.insert(c.name.as_str())) {
            return Err(FeatureError::DuplicateColumnName(dup.name.clone()));
        }
        Ok(Self { origin, freq, columns: cols })
    }

    pub fn origin(&self) -> Timestamp {
        self.origin
    }

    pub fn freq(&self) -> Frequency {
        self.freq
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn groups(&self) -> Vec<ComponentGroup> {
        self.columns.iter().map(|c| c.group.clone()).collect()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn timestamp(&self, i: usize) -> Timestamp {
        self.freq.grid_point(self.origin, i as i64)
    }

    /// Evaluates every column at grid position `i`.
    pub fn row(&self, i: usize, inputs: &RowInputs<'_>) -> Vec<f64> {
        let ts = self.timestamp(i);
        let t = self.freq.elapsed_steps(self.origin, ts);
        self.columns.iter().map(|c| self.eval(&c.source, i, ts, t, inputs)).collect()
    }

    fn eval(&self, src: &Source, i: usize, ts: Timestamp, t: f64, inputs: &RowInputs<'_>) -> f64 {
        match src {
            Source::Intercept => 1.0,
            Source::Growth(f) => f.eval(t),
            Source::GrowthChangepoint { func, at } => hinge(*func, t, *at),
            Source::Fourier { period, m, sin } => fourier_value(period.fraction(ts, self.freq), *m, *sin),
            Source::SeasonalityChangepoint { period, m, sin, after } => {
                if ts > *after {
                    fourier_value(period.fraction(ts, self.freq), *m, *sin)
                } else {
                    0.0
                }
            }
            Source::Event { dates, offset } => event_value(dates, ts, *offset),
            Source::Time(f) => f.value(ts),
            Source::Lag(r) => lag_value(inputs.y, i, *r),
            Source::AvgLag(set) => avg_lag_value(inputs.y, i, set),
            Source::Regressor { slot, lag } => {
                let series = &inputs.regressors[*slot];
                if *lag > i || i - lag >= series.len() {
                    f64::NAN
                } else {
                    series[i - lag]
                }
            }
            Source::Interaction(a, b) => self.eval(a, i, ts, t, inputs) * self.eval(b, i, ts, t, inputs),
        }
    }

    /// Design matrix for grid positions `rows`. Rows with any missing input
    /// are flagged unusable and their missing entries set to zero.
    pub fn matrix(&self, rows: std::ops::Range<usize>, inputs: &RowInputs<'_>) -> DesignMatrix {
        let n = rows.len();
        let mut data = DMatrix::zeros(n, self.ncols());
        let mut usable = vec![true; n];
        for (r, i) in rows.enumerate() {
            for (j, v) in self.row(i, inputs).into_iter().enumerate() {
                if v.is_nan() {
                    usable[r] = false;
                } else {
                    data[(r, j)] = v;
                }
            }
        }
        DesignMatrix::with_groups(self.names(), self.groups(), data, Some(usable))
            .expect("layout names are unique")
    }
}

fn validate_config(config: &FeatureConfig) -> Result<(), FeatureError> {
    let invalid = |s: String| Err(FeatureError::InvalidSpec(s));
    for s in &config.seasonality {
        if s.order == 0 {
            return invalid(format!("seasonality `{}` has order 0", s.period.tag()));
        }
        if let SeasonalPeriod::Custom(p) = s.period {
            if !(p > 0.0) {
                return invalid(format!("period {p} must be positive"));
            }
        }
    }
    if let Some(e) = config.events.iter().find(|e| e.dates.is_empty()) {
        return invalid(format!("event `{}` has no dates", e.name));
    }
    if config.lags.lags.iter().chain(config.lags.agg_lags.iter().flatten()).any(|&r| r == 0) {
        return invalid("lag orders must be at least 1".into());
    }
    if config.lags.agg_lags.iter().any(Vec::is_empty) {
        return invalid("aggregated lag sets must be non-empty".into());
    }
    if let Some(r) = config.regressors.iter().find(|r| r.mode == RegressorMode::Lagged && r.lag == 0) {
        return invalid(format!("lagged regressor `{}` needs lag >= 1", r.name));
    }
    Ok(())
}

/// Builds the training design matrix for a (typically imputed) series.
///
/// `regressors` holds one column per configured regressor, keyed by name and
/// aligned to the series grid. Rows lacking lag history are flagged
/// unusable.
pub fn build_design_matrix(
    ts: &TimeSeries,
    regressors: &[(String, Vec<f64>)],
    config: &FeatureConfig,
) -> Result<DesignMatrix, FeatureError> {
    let layout = DesignLayout::new(config, ts.start(), ts.end(), ts.freq())?;
    let y = ts.to_nan_vec();
    let regs = config
        .regressors
        .iter()
        .map(|spec| {
            regressors
                .iter()
                .find(|(n, _)| *n == spec.name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| FeatureError::UnknownRegressor(spec.name.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(layout.matrix(0..ts.len(), &RowInputs { y: &y, regressors: &regs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::parse_timestamp;

    fn series(n: usize) -> TimeSeries {
        let v: Vec<f64> = (0..n).map(|i| i as f64).collect();
        TimeSeries::from_values(parse_timestamp("2024-01-01").unwrap(), Frequency::daily(), &v).unwrap()
    }

    #[test]
    fn linear_growth_with_weekly_fourier() {
        let cfg = FeatureConfig {
            growth: Some(GrowthSpec::new(GrowthFunction::Linear)),
            seasonality: vec![SeasonalitySpec::new(SeasonalPeriod::Weekly, 1)],
            ..Default::default()
        };
        let m = build_design_matrix(&series(14), &[], &cfg).unwrap();
        assert_eq!(m.names(), ["intercept", "growth_linear", "sin1_weekly", "cos1_weekly"]);
        // 2024-01-01 is a Monday: d = 0.
        assert_eq!(m.data()[(0, 2)], 0.0);
        assert_eq!(m.data()[(0, 3)], 1.0);
        assert_eq!(m.data()[(3, 1)], 3.0);
    }

    #[test]
    fn lag_rows_are_masked() {
        let cfg = FeatureConfig { lags: LagSpec { lags: vec![1], agg_lags: vec![] }, ..Default::default() };
        let m = build_design_matrix(&series(5), &[], &cfg).unwrap();
        assert_eq!(m.usable(), [false, true, true, true, true]);
        assert_eq!(m.data()[(0, 1)], 0.0);
        assert_eq!(m.data()[(2, 1)], 1.0);
    }

    #[test]
    fn empty_config_is_intercept_only() {
        let m = build_design_matrix(&series(3), &[], &FeatureConfig::default()).unwrap();
        assert_eq!(m.names(), ["intercept"]);
    }

    #[test]
    fn full_column_order() {
        let start = parse_timestamp("2024-01-01").unwrap();
        let mut yearly = SeasonalitySpec::new(SeasonalPeriod::Yearly, 1);
        yearly.changepoints = vec![parse_timestamp("2024-01-05").unwrap()];
        let cfg = FeatureConfig {
            growth: Some(GrowthSpec { func: GrowthFunction::Linear, changepoints: vec![parse_timestamp("2024-01-03").unwrap()] }),
            seasonality: vec![yearly, SeasonalitySpec::new(SeasonalPeriod::Weekly, 1)],
            events: vec![EventSpec::new("Launch", [start.date()], 0, 1)],
            time_features: vec![TimeFeature::MonthStart],
            lags: LagSpec { lags: vec![1], agg_lags: vec![vec![1, 2]] },
            regressors: vec![RegressorSpec::future("temp"), RegressorSpec::lagged("temp", 2)],
            interactions: vec![InteractionSpec::new("is_weekend", "y_lag1")],
        };
        let regs = vec![("temp".to_string(), vec![1.0; 10])];
        let m = build_design_matrix(&series(10), &regs, &cfg).unwrap();
        assert_eq!(
            m.names(),
            [
                "intercept", "growth_linear", "cp1_linear", "sin1_weekly", "cos1_weekly", "sin1_yearly",
                "cos1_yearly", "scp1_sin1_yearly", "scp1_cos1_yearly", "launch", "launch_p1", "month_start",
                "y_lag1", "y_avglag_1_2", "temp", "temp_lag2", "is_weekend:y_lag1"
            ]
        );
        assert_eq!(m.groups()[6], ComponentGroup::Seasonality("yearly".into()));
        assert_eq!(m.groups()[16], ComponentGroup::Interactions);
        // Saturday 2024-01-06 (row 5): is_weekend * y_lag1 = y[4] = 4.
        assert_eq!(m.data()[(5, 16)], 4.0);
        assert_eq!(m.usable_rows().first(), Some(&2));
    }

    #[test]
    fn column_names_are_stable_and_unique() {
        let cfg = FeatureConfig {
            growth: Some(GrowthSpec::new(GrowthFunction::Sqrt)),
            seasonality: vec![
                SeasonalitySpec::new(SeasonalPeriod::Weekly, 3),
                SeasonalitySpec::new(SeasonalPeriod::Yearly, 5),
            ],
            interactions: vec![InteractionSpec::new("is_weekend", "sin*_weekly")],
            ..Default::default()
        };
        let a = build_design_matrix(&series(30), &[], &cfg).unwrap();
        let b = build_design_matrix(&series(30), &[], &cfg).unwrap();
        assert_eq!(a.names(), b.names());
        let unique: HashSet<_> = a.names().iter().collect();
        assert_eq!(unique.len(), a.ncols());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let d = parse_timestamp("2024-01-02").unwrap().date();
        let cfg = FeatureConfig {
            events: vec![EventSpec::new("A b", [d], 0, 0), EventSpec::new("a-b", [d], 0, 0)],
            ..Default::default()
        };
        assert_eq!(
            build_design_matrix(&series(3), &[], &cfg).unwrap_err(),
            FeatureError::DuplicateColumnName("a_b".into())
        );
    }

    #[test]
    fn missing_regressor_is_reported() {
        let cfg = FeatureConfig { regressors: vec![RegressorSpec::future("x")], ..Default::default() };
        assert_eq!(build_design_matrix(&series(3), &[], &cfg).unwrap_err(), FeatureError::UnknownRegressor("x".into()));
    }
}
