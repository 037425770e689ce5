//! Automatic trend and seasonality changepoint detection.
//!
//! Candidates are placed evenly (in continuous time) over the head of the
//! series, excluding a window at the end. An adaptive lasso selects among
//! them with the growth and base Fourier terms left unpenalized; selected
//! points are re-scored by a least-squares refit, merged when too close,
//! screened by a partial F-test and finally located on the original grid
//! by a local least-squares search.

use std::collections::BTreeMap;

use chrono::Duration;
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use thiserror::Error;

use crate::features::{fourier_value, DesignMatrix, SeasonalPeriod, SeasonalitySpec};
use crate::series::{aggregate, impute_linear, AggregateStat, Frequency, FrequencyUnit, SeriesError, TimeSeries, Timestamp};
use crate::solvers::{
    adaptive_lasso_weights, fit_lasso_with, fit_ols, fit_ridge_with, lasso_lambda_max, FitOptions, LinearFit,
    PenaltySpec, SolverError,
};

const DAY: f64 = 86_400.0;
const MAX_PROBES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChangepointError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("series too short for changepoint detection: {len} points after aggregation (need {needed})")]
    TooShort { len: usize, needed: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid detection config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig {
    /// Coarser frequency to aggregate to before detection; `None` detects on
    /// the original grid.
    pub agg_target: Option<Frequency>,
    pub n_candidates: usize,
    pub end_exclusion_frac: f64,
    pub trend_min_distance_days: f64,
    pub seasonality_min_distance_days: f64,
    /// Position on the lasso path in [0, 1]; larger is sparser.
    pub lambda_strength: f64,
    pub yearly_order: usize,
    /// Family-wise level of the partial F-test screen; 1 disables it.
    pub significance: f64,
    /// Cap on the Fourier order used for seasonality changepoint blocks.
    pub seasonality_max_order: usize,
}

impl DetectionConfig {
    /// Defaults for a series of the given frequency: weekly aggregation for
    /// daily data, daily for sub-daily, none otherwise.
    pub fn for_frequency(freq: Frequency) -> Self {
        let agg_target = match freq.unit() {
            FrequencyUnit::Minute | FrequencyUnit::Hour => Some(Frequency::daily()),
            FrequencyUnit::Day if freq.multiple() < 7 => Some(Frequency::weekly()),
            _ => None,
        };
        Self {
            agg_target,
            n_candidates: 100,
            end_exclusion_frac: 0.1,
            trend_min_distance_days: 14.0,
            seasonality_min_distance_days: 30.0,
            lambda_strength: 0.6,
            yearly_order: 6,
            significance: 0.01,
            seasonality_max_order: 4,
        }
    }

    pub fn validate(&self) -> Result<(), ChangepointError> {
        let bad = |m: &str| Err(ChangepointError::InvalidConfig(m.to_string()));
        if self.n_candidates < 1 {
            return bad("n_candidates must be at least 1");
        }
        if !(0.0..1.0).contains(&self.end_exclusion_frac) {
            return bad("end_exclusion_frac must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lambda_strength) {
            return bad("lambda_strength must be in [0, 1]");
        }
        if !(self.trend_min_distance_days >= 0.0 && self.seasonality_min_distance_days >= 0.0) {
            return bad("min distances must be non-negative");
        }
        if !(self.significance > 0.0 && self.significance <= 1.0) {
            return bad("significance must be in (0, 1]");
        }
        if self.seasonality_max_order < 1 {
            return bad("seasonality_max_order must be at least 1");
        }
        Ok(())
    }
}

/// A detected changepoint and its score (absolute refit coefficient; for
/// seasonality the largest absolute coefficient of its block).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Changepoint {
    pub ts: Timestamp,
    pub score: f64,
}

/// Trend changepoints together with the fitted piecewise-linear trend.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendDetection {
    pub changepoints: Vec<Changepoint>,
    pub n_candidates: usize,
    /// Candidates chosen by the lasso, before merging and screening.
    pub lasso_selected: Vec<Timestamp>,
    origin: Timestamp,
    intercept: f64,
    slope: f64,
    hinges: Vec<(f64, f64)>,
}

impl TrendDetection {
    pub fn timestamps(&self) -> Vec<Timestamp> {
        self.changepoints.iter().map(|c| c.ts).collect()
    }

    /// Fitted trend G(t) (excluding seasonality).
    pub fn trend_at(&self, ts: Timestamp) -> f64 {
        let t = days_between(self.origin, ts);
        self.intercept + self.slope * t + self.hinges.iter().map(|(at, c)| c * (t - at).max(0.0)).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChangepointSet {
    pub trend: Vec<Changepoint>,
    pub seasonality: BTreeMap<String, Vec<Changepoint>>,
    pub n_candidates: usize,
}

fn days_between(a: Timestamp, b: Timestamp) -> f64 {
    (b - a).num_milliseconds() as f64 / 1000.0 / DAY
}

fn add_days(a: Timestamp, days: f64) -> Timestamp {
    a + Duration::milliseconds((days * DAY * 1000.0).round() as i64)
}

/// Greedy merge of sorted points: every run of consecutive points closer
/// than `min_distance` keeps its highest-|score| member (earliest on ties).
/// Repeats until all kept points are at least `min_distance` apart.
/// Returns the indices kept.
pub fn merge_changepoints(points: &[f64], scores: &[f64], min_distance: f64) -> Vec<usize> {
    let mut kept: Vec<usize> = (0..points.len()).collect();
    loop {
        let mut next = Vec::new();
        let mut i = 0;
        while i < kept.len() {
            let mut best = kept[i];
            let mut j = i + 1;
            while j < kept.len() && points[kept[j]] - points[kept[j - 1]] < min_distance {
                if scores[kept[j]].abs() > scores[best].abs() {
                    best = kept[j];
                }
                j += 1;
            }
            next.push(best);
            i = j;
        }
        if next.len() == kept.len() {
            return next;
        }
        kept = next;
    }
}

/// What a changepoint adds to the design.
#[derive(Clone, Copy)]
enum Kind {
    /// Hinge `max(0, t - c)` in days.
    Trend,
    /// Indicator `1{t > c}` times each base Fourier column.
    Seasonal { period: SeasonalPeriod, order: usize },
}

/// Detection data on one grid: times in days since the series start, the
/// target, and the unpenalized base columns (intercept excluded).
struct Problem {
    days: Vec<f64>,
    y: Vec<f64>,
    usable: Vec<bool>,
    base_names: Vec<String>,
    base: Vec<Vec<f64>>,
    fractions: Vec<f64>,
    kind: Kind,
}

impl Problem {
    fn new(stamps: &[Timestamp], origin: Timestamp, y: Vec<f64>, usable: Vec<bool>, kind: Kind, freq: Frequency, yearly: usize) -> Self {
        let days: Vec<f64> = stamps.iter().map(|&s| days_between(origin, s)).collect();
        let mut base_names = Vec::new();
        let mut base = Vec::new();
        let fourier = |period: SeasonalPeriod, order: usize, names: &mut Vec<String>, cols: &mut Vec<Vec<f64>>| {
            let d: Vec<f64> = stamps.iter().map(|&s| period.fraction(s, freq)).collect();
            for m in 1..=order {
                for sin in [true, false] {
                    names.push(format!("{}{m}_{}", if sin { "sin" } else { "cos" }, period.tag()));
                    cols.push(d.iter().map(|&x| fourier_value(x, m, sin)).collect());
                }
            }
            d
        };
        let fractions = match kind {
            Kind::Trend => {
                base_names.push("growth_linear".into());
                base.push(days.clone());
                if yearly > 0 {
                    fourier(SeasonalPeriod::Yearly, yearly, &mut base_names, &mut base);
                }
                Vec::new()
            }
            Kind::Seasonal { period, order } => fourier(period, order, &mut base_names, &mut base),
        };
        Self { days, y, usable, base_names, base, fractions, kind }
    }

    fn block_width(&self) -> usize {
        match self.kind {
            Kind::Trend => 1,
            Kind::Seasonal { order, .. } => 2 * order,
        }
    }

    fn design(&self, cps: &[f64]) -> DesignMatrix {
        let n = self.days.len();
        let w = self.block_width();
        let nb = self.base.len();
        let ncols = 1 + nb + w * cps.len();
        let mut data = DMatrix::zeros(n, ncols);
        let mut names = Vec::with_capacity(ncols);
        names.push("intercept".to_string());
        names.extend(self.base_names.iter().cloned());
        for i in 0..n {
            data[(i, 0)] = 1.0;
            for (j, col) in self.base.iter().enumerate() {
                data[(i, 1 + j)] = col[i];
            }
        }
        for (k, &c) in cps.iter().enumerate() {
            let start = 1 + nb + k * w;
            match self.kind {
                Kind::Trend => {
                    names.push(format!("cand{k}"));
                    for i in 0..n {
                        data[(i, start)] = (self.days[i] - c).max(0.0);
                    }
                }
                Kind::Seasonal { order, .. } => {
                    for m in 1..=order {
                        for (s, sin) in [true, false].into_iter().enumerate() {
                            names.push(format!("cand{k}_{}{m}", if sin { "sin" } else { "cos" }));
                            let col = start + 2 * (m - 1) + s;
                            for i in 0..n {
                                if self.days[i] > c {
                                    data[(i, col)] = fourier_value(self.fractions[i], m, sin);
                                }
                            }
                        }
                    }
                }
            }
        }
        let dm = DesignMatrix::new(names, data).expect("unique names");
        dm.with_usable(self.usable.clone())
    }

    fn n_base(&self) -> usize {
        1 + self.base.len()
    }

    /// Largest absolute coefficient of each changepoint block.
    fn block_scores(&self, fit: &LinearFit, ncps: usize) -> Vec<f64> {
        let nb = self.base.len();
        let w = self.block_width();
        (0..ncps)
            .map(|k| fit.coefficients[nb + k * w..nb + (k + 1) * w].iter().fold(0.0, |a: f64, b| a.max(b.abs())))
            .collect()
    }

    fn refit(&self, cps: &[f64]) -> Result<LinearFit, ChangepointError> {
        let x = self.design(cps);
        match fit_ols(&x, &self.y) {
            Ok(f) => Ok(f),
            Err(SolverError::RankDeficient(_)) => {
                let opts = FitOptions { standardize: true, ..Default::default() };
                Ok(fit_ridge_with(&x, &self.y, 1e-8, &opts)?)
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Partial F-test p-value for dropping each block.
    fn block_p_values(&self, cps: &[f64]) -> Result<Vec<f64>, ChangepointError> {
        let full = self.refit(cps)?;
        let n = full.residuals.len();
        let p = self.n_base() + self.block_width() * cps.len();
        if n <= p {
            return Ok(vec![0.0; cps.len()]);
        }
        let df = (n - p) as f64;
        let rss_full = full.rss();
        let k = self.block_width() as f64;
        let dist = FisherSnedecor::new(k, df).map_err(|e| ChangepointError::InvalidConfig(e.to_string()))?;
        let scale: f64 = self.y.iter().filter(|v| v.is_finite()).map(|v| v * v).sum();
        let mut out = Vec::with_capacity(cps.len());
        for i in 0..cps.len() {
            let reduced: Vec<f64> = cps.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| *c).collect();
            let rss_r = self.refit(&reduced)?.rss();
            if rss_full <= 1e-24 * scale.max(f64::MIN_POSITIVE) {
                out.push(if rss_r > rss_full { 0.0 } else { 1.0 });
                continue;
            }
            let f = ((rss_r - rss_full).max(0.0) / k) / (rss_full / df);
            out.push(1.0 - dist.cdf(f));
        }
        Ok(out)
    }
}

struct Detected {
    positions: Vec<usize>,
    scores: Vec<f64>,
    fit: Option<LinearFit>,
    lasso_selected: Vec<f64>,
    n_candidates: usize,
}

/// Shared selection pipeline. `coarse` is where the lasso runs; `fine` is
/// the original grid used for final placement.
fn run_detection(
    coarse: &Problem,
    fine: &Problem,
    cfg: &DetectionConfig,
    min_distance: f64,
    coarse_step_days: f64,
) -> Result<Detected, ChangepointError> {
    let usable_idx: Vec<usize> = (0..coarse.days.len()).filter(|&i| coarse.usable[i] && coarse.y[i].is_finite()).collect();
    let len = usable_idx.len();
    if len < 10 {
        return Err(ChangepointError::TooShort { len, needed: 10 });
    }
    let first = coarse.days[usable_idx[0]];
    let last = coarse.days[*usable_idx.last().unwrap()];
    let window = (1.0 - cfg.end_exclusion_frac) * (last - first);
    let mut n_c = cfg.n_candidates.min(len / 2);
    if coarse.block_width() > 1 {
        n_c = n_c.min((len / 2).saturating_sub(coarse.n_base()) / coarse.block_width());
    }
    let n_c = n_c.max(1);
    let spacing = window / (n_c + 1) as f64;
    let candidates: Vec<f64> = (1..=n_c).map(|j| first + j as f64 * spacing).collect();

    // Scale-free target.
    let vals: Vec<f64> = usable_idx.iter().map(|&i| coarse.y[i]).collect();
    let mean = vals.iter().sum::<f64>() / len as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len as f64).sqrt();
    let empty = |fit: Option<LinearFit>| Detected {
        positions: Vec::new(),
        scores: Vec::new(),
        fit,
        lasso_selected: Vec::new(),
        n_candidates: n_c,
    };
    if sd == 0.0 {
        return Ok(empty(fine.refit(&[]).ok()));
    }
    let ys: Vec<f64> = coarse.y.iter().map(|v| (v - mean) / sd).collect();
    let scaled = Problem { y: ys.clone(), ..coarse.shallow() };
    let base_fit = scaled.refit(&[])?;
    if base_fit.rss() <= 1e-18 * len as f64 {
        return Ok(empty(fine.refit(&[]).ok()));
    }

    let x = scaled.design(&candidates);
    let mut factors = vec![0.0; x.ncols() - 1];
    for f in factors.iter_mut().skip(scaled.base.len()) {
        *f = 1.0;
    }
    let opts = FitOptions { penalty_factors: Some(factors), ..Default::default() };
    let weights = adaptive_lasso_weights(&x, &ys, 1.0, &opts)?;
    let lmax = lasso_lambda_max(&x, &ys, &opts, Some(&weights))?;
    if !(lmax > 0.0) {
        return Ok(empty(fine.refit(&[]).ok()));
    }
    let lmin = 1e-4 * lmax;
    let lambda = lmax.powf(cfg.lambda_strength) * lmin.powf(1.0 - cfg.lambda_strength);
    let lasso = fit_lasso_with(&x, &ys, &PenaltySpec::adaptive_lasso(lambda, 1.0).with_weights(weights), &opts)?;
    let selected_scores = scaled.block_scores(&lasso, candidates.len());
    let mut cps: Vec<f64> =
        candidates.iter().zip(&selected_scores).filter(|(_, s)| **s > 0.0).map(|(c, _)| *c).collect();
    let lasso_selected = cps.clone();

    // Re-score, merge, then screen by significance.
    if !cps.is_empty() {
        let refit = scaled.refit(&cps)?;
        let scores = scaled.block_scores(&refit, cps.len());
        let keep = merge_changepoints(&cps, &scores, min_distance);
        cps = keep.iter().map(|&i| cps[i]).collect();
    }
    let alpha = cfg.significance / n_c as f64;
    while !cps.is_empty() && cfg.significance < 1.0 {
        let pv = scaled.block_p_values(&cps)?;
        let (worst, p) = pv.iter().enumerate().fold((0, -1.0), |acc, (i, &p)| if p > acc.1 { (i, p) } else { acc });
        if p < alpha {
            break;
        }
        cps.remove(worst);
    }

    // Place on the fine grid by local least squares.
    let limit = fine.days.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fine_first = fine.days[0];
    let exclusion = fine_first + (1.0 - cfg.end_exclusion_frac) * (limit - fine_first);
    let half = spacing / 2.0 + coarse_step_days / 2.0;
    let mut positions: Vec<usize> = cps
        .iter()
        .map(|&c| {
            let idx = fine.days.partition_point(|&d| d < c);
            idx.min(fine.days.len() - 1)
        })
        .collect();
    for k in 0..positions.len() {
        let lo_day = positions.get(k.wrapping_sub(1)).map_or(fine_first, |&p| fine.days[p]);
        let hi_day = positions.get(k + 1).map_or(exclusion, |&p| fine.days[p].min(exclusion));
        let centre = cps[k];
        let probes: Vec<usize> = (0..fine.days.len())
            .filter(|&i| {
                let d = fine.days[i];
                d > lo_day && d < hi_day.max(lo_day) && (d - centre).abs() <= half && d <= exclusion
            })
            .collect();
        if probes.is_empty() {
            continue;
        }
        let stride = probes.len().div_ceil(MAX_PROBES);
        let mut best = (f64::INFINITY, positions[k]);
        for &i in probes.iter().step_by(stride) {
            let mut trial: Vec<f64> = positions.iter().map(|&p| fine.days[p]).collect();
            trial[k] = fine.days[i];
            if let Ok(f) = fine.refit(&trial) {
                let rss = f.rss();
                if rss < best.0 {
                    best = (rss, i);
                }
            }
        }
        positions[k] = best.1;
    }
    positions.retain(|&p| fine.days[p] <= exclusion + 1e-9);
    positions.dedup();

    let at: Vec<f64> = positions.iter().map(|&p| fine.days[p]).collect();
    let fit = fine.refit(&at)?;
    let scores = fine.block_scores(&fit, at.len());
    Ok(Detected { positions, scores, fit: Some(fit), lasso_selected, n_candidates: n_c })
}

impl Problem {
    fn shallow(&self) -> Problem {
        Problem {
            days: self.days.clone(),
            y: self.y.clone(),
            usable: self.usable.clone(),
            base_names: self.base_names.clone(),
            base: self.base.clone(),
            fractions: self.fractions.clone(),
            kind: self.kind,
        }
    }
}

/// Timestamps at the centre of each aggregation bucket.
fn bucket_centres(ts: &TimeSeries, agg: &TimeSeries) -> Vec<Timestamp> {
    let base = ts.freq();
    (0..agg.len())
        .map(|k| {
            let first = agg.timestamp(k);
            let next = agg.freq().grid_point(agg.start(), k as i64 + 1);
            let last = match base.step_seconds() {
                Some(s) => next - Duration::seconds(s),
                None => first,
            };
            first + (last - first) / 2
        })
        .collect()
}

fn coarse_view(ts: &TimeSeries, target: Option<Frequency>) -> Result<(Vec<Timestamp>, Vec<f64>, f64), ChangepointError> {
    match target {
        Some(f) => {
            let agg = aggregate(ts, f, AggregateStat::Mean)?;
            let centres = bucket_centres(ts, &agg);
            Ok((centres, agg.to_nan_vec(), f.nominal_seconds() / DAY))
        }
        None => Ok((ts.timestamps(), ts.to_nan_vec(), ts.freq().nominal_seconds() / DAY)),
    }
}

fn span_days(ts: &TimeSeries) -> f64 {
    days_between(ts.start(), ts.end())
}

/// Detects trend changepoints of a linear growth term, modeling yearly
/// seasonality alongside when the series spans at least a year.
pub fn detect_trend_changepoints(ts: &TimeSeries, cfg: &DetectionConfig) -> Result<TrendDetection, ChangepointError> {
    cfg.validate()?;
    let yearly = if span_days(ts) >= 365.0 { cfg.yearly_order } else { 0 };
    let yearly = yearly.min(SeasonalPeriod::Yearly.max_order(cfg.agg_target.unwrap_or(ts.freq())));
    let (stamps, y, step) = coarse_view(ts, cfg.agg_target)?;
    let usable = y.iter().map(|v| v.is_finite()).collect();
    let coarse = Problem::new(&stamps, ts.start(), y, usable, Kind::Trend, ts.freq(), yearly);
    let imputed = impute_linear(ts)?;
    let fine = Problem::new(
        &ts.timestamps(),
        ts.start(),
        imputed.values(),
        imputed.imputed.iter().map(|m| !m).collect(),
        Kind::Trend,
        ts.freq(),
        yearly,
    );
    let det = run_detection(&coarse, &fine, cfg, cfg.trend_min_distance_days, step)?;
    let fit = match det.fit {
        Some(f) => f,
        None => fine.refit(&[])?,
    };
    let hinges = det
        .positions
        .iter()
        .zip(&det.scores)
        .enumerate()
        .map(|(k, (&p, _))| (fine.days[p], fit.coefficients[fine.base.len() + k]))
        .collect();
    Ok(TrendDetection {
        changepoints: det
            .positions
            .iter()
            .zip(&det.scores)
            .map(|(&p, &s)| Changepoint { ts: ts.timestamp(p), score: s })
            .collect(),
        n_candidates: det.n_candidates,
        lasso_selected: det.lasso_selected.iter().map(|&d| add_days(ts.start(), d)).collect(),
        origin: ts.start(),
        intercept: fit.intercept,
        slope: fit.coefficients[0],
        hinges,
    })
}

/// Detects seasonality changepoints per period on the de-trended series.
/// Each period is searched on the aggregated grid when that grid resolves
/// it (at least 20 points per cycle), else on the original grid.
pub fn detect_seasonality_changepoints(
    ts: &TimeSeries,
    trend: &TrendDetection,
    periods: &[SeasonalitySpec],
    cfg: &DetectionConfig,
) -> Result<BTreeMap<String, Vec<Changepoint>>, ChangepointError> {
    cfg.validate()?;
    let stamps = ts.timestamps();
    let detrended: Vec<Option<f64>> =
        ts.values().iter().zip(&stamps).map(|(v, &s)| v.map(|y| y - trend.trend_at(s))).collect();
    let dts = TimeSeries::new(ts.start(), ts.freq(), detrended)?;
    let imputed = impute_linear(&dts)?;
    let mut out = BTreeMap::new();
    for spec in periods {
        let period_s = spec.period.approx_seconds(ts.freq());
        let target = cfg.agg_target.filter(|f| period_s >= 20.0 * f.nominal_seconds());
        let order = spec.order.min(cfg.seasonality_max_order).min(spec.period.max_order(target.unwrap_or(ts.freq())));
        let cycles = span_days(ts) * 86_400.0 / period_s;
        if cycles < 2.0 {
            log::warn!("{} seasonality spans {cycles:.2} cycles; skipping changepoint detection", spec.period.tag());
        }
        if order == 0 || cycles < 2.0 {
            out.insert(spec.period.tag(), Vec::new());
            continue;
        }
        let kind = Kind::Seasonal { period: spec.period, order };
        let (cstamps, y, step) = coarse_view(&dts, target)?;
        let usable = y.iter().map(|v| v.is_finite()).collect();
        let coarse = Problem::new(&cstamps, ts.start(), y, usable, kind, ts.freq(), 0);
        let fine = Problem::new(
            &stamps,
            ts.start(),
            imputed.values(),
            imputed.imputed.iter().map(|m| !m).collect(),
            kind,
            ts.freq(),
            0,
        );
        let det = run_detection(&coarse, &fine, cfg, cfg.seasonality_min_distance_days, step)?;
        let found = det
            .positions
            .iter()
            .zip(&det.scores)
            .map(|(&p, &s)| Changepoint { ts: ts.timestamp(p), score: s })
            .collect();
        out.insert(spec.period.tag(), found);
    }
    Ok(out)
}

/// Trend detection followed by seasonality detection for `periods`.
pub fn detect_changepoints(
    ts: &TimeSeries,
    periods: &[SeasonalitySpec],
    cfg: &DetectionConfig,
) -> Result<(TrendDetection, ChangepointSet), ChangepointError> {
    let trend = detect_trend_changepoints(ts, cfg)?;
    let seasonality = if periods.is_empty() {
        BTreeMap::new()
    } else {
        detect_seasonality_changepoints(ts, &trend, periods, cfg)?
    };
    let set = ChangepointSet { trend: trend.changepoints.clone(), seasonality, n_candidates: trend.n_candidates };
    Ok((trend, set))
}
