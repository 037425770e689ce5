//! Conditional volatility model: residual distributions grouped by
//! categorical calendar features, with coarsening fallback for small groups.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::features::TimeFeature;
use crate::series::Timestamp;
use crate::stats::{interpolated_quantile, normal_quantile};

pub const DEFAULT_MIN_GROUP_SIZE: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VolatilityError {
    #[error("volatility model needs at least one finite residual")]
    NoResiduals,
    #[error("{residuals} residuals but {rows} feature rows")]
    RowMismatch { residuals: usize, rows: usize },
    #[error("feature row has {got} values, expected {expected}")]
    KeyWidth { got: usize, expected: usize },
    #[error("probability {0} is outside (0, 1)")]
    InvalidProbability(f64),
    #[error("unknown or non-categorical volatility feature `{0}`")]
    UnknownFeature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolatilityMethod {
    Empirical,
    #[default]
    Gaussian,
}

impl VolatilityMethod {
    pub fn name(&self) -> &'static str {
        match self {
            VolatilityMethod::Empirical => "empirical",
            VolatilityMethod::Gaussian => "gaussian",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "empirical" => Some(VolatilityMethod::Empirical),
            "gaussian" => Some(VolatilityMethod::Gaussian),
            _ => None,
        }
    }
}

/// Residual sample of one feature-value combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualGroup {
    /// Values of the leading features this group is keyed on.
    pub key: Vec<String>,
    /// Residuals in ascending order.
    pub sorted: Vec<f64>,
    /// Zero-mean Gaussian scale: root mean square of the residuals.
    pub sigma: f64,
}

impl ResidualGroup {
    fn new(key: Vec<String>, mut sample: Vec<f64>) -> Self {
        sample.sort_by(f64::total_cmp);
        let sigma = (sample.iter().map(|r| r * r).sum::<f64>() / sample.len() as f64).sqrt();
        Self { key, sorted: sample, sigma }
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    fn degenerate(&self) -> bool {
        self.sorted.first() == self.sorted.last()
    }

    fn quantile(&self, method: VolatilityMethod, p: f64) -> f64 {
        match method {
            VolatilityMethod::Empirical => interpolated_quantile(&self.sorted, p),
            VolatilityMethod::Gaussian => self.sigma * normal_quantile(p),
        }
    }

    /// Label such as `dow=5|is_weekend=1`; `all` for the marginal pool.
    pub fn label(&self, features: &[String]) -> String {
        if self.key.is_empty() {
            return "all".into();
        }
        features.iter().zip(&self.key).map(|(f, v)| format!("{f}={v}")).collect::<Vec<_>>().join("|")
    }
}

/// Fitted volatility model.
///
/// `levels[k]` holds the groups keyed on the first `p - k` features. A
/// residual is stored in the finest level whose group exceeds the minimum
/// size; what remains after the last level forms the marginal pool.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityTable {
    features: Vec<String>,
    min_group_size: usize,
    method: VolatilityMethod,
    levels: Vec<BTreeMap<Vec<String>, ResidualGroup>>,
    pool: ResidualGroup,
    /// Residuals not claimed by any keyed group.
    pool_count: usize,
}

/// Categorical value of a calendar feature, as used in group keys.
pub fn feature_value(feature: TimeFeature, ts: Timestamp) -> String {
    format!("{}", feature.value(ts) as i64)
}

/// Parses categorical calendar feature names (`dow`, `is_weekend`, `hour`,
/// `month`, `dom`, month/quarter boundary flags).
pub fn parse_features(names: &[String]) -> Result<Vec<TimeFeature>, VolatilityError> {
    names
        .iter()
        .map(|n| match TimeFeature::from_name(n) {
            Some(TimeFeature::Tod) | Some(TimeFeature::DoyFrac) | None => Err(VolatilityError::UnknownFeature(n.clone())),
            Some(f) => Ok(f),
        })
        .collect()
}

/// Group keys for each timestamp.
pub fn calendar_rows(features: &[TimeFeature], stamps: &[Timestamp]) -> Vec<Vec<String>> {
    stamps.iter().map(|&t| features.iter().map(|&f| feature_value(f, t)).collect()).collect()
}

/// Fits the grouped residual model. Non-finite residuals are ignored.
pub fn fit_volatility(
    residuals: &[f64],
    feature_rows: &[Vec<String>],
    features: &[String],
    min_group_size: usize,
    method: VolatilityMethod,
) -> Result<VolatilityTable, VolatilityError> {
    if residuals.len() != feature_rows.len() {
        return Err(VolatilityError::RowMismatch { residuals: residuals.len(), rows: feature_rows.len() });
    }
    let p = features.len();
    if let Some(row) = feature_rows.iter().find(|r| r.len() != p) {
        return Err(VolatilityError::KeyWidth { got: row.len(), expected: p });
    }
    let mut pending: Vec<(Vec<String>, f64)> =
        residuals.iter().zip(feature_rows).filter(|(r, _)| r.is_finite()).map(|(r, k)| (k.clone(), *r)).collect();
    if pending.is_empty() {
        return Err(VolatilityError::NoResiduals);
    }
    let all: Vec<f64> = pending.iter().map(|(_, r)| *r).collect();

    let mut levels = Vec::with_capacity(p);
    for width in (1..=p).rev() {
        let mut buckets: BTreeMap<Vec<String>, Vec<f64>> = BTreeMap::new();
        for (key, r) in &pending {
            buckets.entry(key[..width].to_vec()).or_default().push(*r);
        }
        let mut stored = BTreeMap::new();
        for (key, sample) in buckets {
            if sample.len() > min_group_size {
                stored.insert(key.clone(), ResidualGroup::new(key, sample));
            }
        }
        pending.retain(|(key, _)| !stored.contains_key(&key[..width]));
        levels.push(stored);
    }
    let pool_count = pending.len();
    let pool_sample = if pending.is_empty() { all } else { pending.into_iter().map(|(_, r)| r).collect() };
    Ok(VolatilityTable {
        features: features.to_vec(),
        min_group_size,
        method,
        levels,
        pool: ResidualGroup::new(Vec::new(), pool_sample),
        pool_count,
    })
}

impl VolatilityTable {
    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn method(&self) -> VolatilityMethod {
        self.method
    }

    pub fn min_group_size(&self) -> usize {
        self.min_group_size
    }

    /// Keyed groups from finest to coarsest, followed by the marginal pool.
    pub fn groups(&self) -> Vec<&ResidualGroup> {
        self.levels.iter().flat_map(|l| l.values()).chain(std::iter::once(&self.pool)).collect()
    }

    /// Residuals that fell through every keyed level.
    pub fn pool_count(&self) -> usize {
        self.pool_count
    }

    /// The group serving `key`: the finest stored group matching a prefix
    /// of it, else the marginal pool.
    pub fn resolve(&self, key: &[String]) -> &ResidualGroup {
        let p = self.features.len();
        for (k, level) in self.levels.iter().enumerate() {
            let width = p - k;
            if key.len() >= width {
                if let Some(g) = level.get(&key[..width]) {
                    return g;
                }
            }
        }
        &self.pool
    }

    /// Residual quantile `Q(p)` for the group of `key`.
    pub fn quantile(&self, key: &[String], p: f64) -> Result<f64, VolatilityError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(VolatilityError::InvalidProbability(p));
        }
        Ok(self.resolve(key).quantile(self.method, p))
    }

    /// `(Ŷ + Q(α/2), Ŷ + Q(1 − α/2))` per row with `α = 1 − coverage`.
    /// Zero-spread groups get half-width `1e-9 · max(1, |Ŷ|)`.
    pub fn predict_interval(
        &self,
        forecasts: &[f64],
        rows: &[Vec<String>],
        coverage: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), VolatilityError> {
        let alpha = 1.0 - coverage;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(VolatilityError::InvalidProbability(coverage));
        }
        if forecasts.len() != rows.len() {
            return Err(VolatilityError::RowMismatch { residuals: forecasts.len(), rows: rows.len() });
        }
        let mut lower = Vec::with_capacity(rows.len());
        let mut upper = Vec::with_capacity(rows.len());
        for (&yhat, key) in forecasts.iter().zip(rows) {
            let g = self.resolve(key);
            let mut lo = yhat + g.quantile(self.method, alpha / 2.0);
            let mut hi = yhat + g.quantile(self.method, 1.0 - alpha / 2.0);
            let eps = 1e-9 * yhat.abs().max(1.0);
            if g.degenerate() && hi - lo < 2.0 * eps {
                let mid = 0.5 * (lo + hi);
                lo = mid - eps;
                hi = mid + eps;
            }
            lower.push(lo);
            upper.push(hi);
        }
        Ok((lower, upper))
    }

    /// Q-Q plot data per stored group: plotting positions `(i − 0.5)/n`
    /// mapped through `σ·Φ⁻¹` against the ordered residuals.
    pub fn qq_rows(&self) -> Vec<(String, f64, f64)> {
        let mut out = Vec::new();
        for g in self.groups() {
            let label = g.label(&self.features);
            let n = g.n() as f64;
            for (i, &r) in g.sorted.iter().enumerate() {
                let theo = g.sigma * normal_quantile((i as f64 + 0.5) / n);
                out.push((label.clone(), theo, r));
            }
        }
        out
    }

    pub fn qq_csv(&self) -> String {
        let mut s = String::from("group,theoretical_q,sample_q\n");
        for (label, t, r) in self.qq_rows() {
            let _ = writeln!(s, "{label},{t},{r}");
        }
        s
    }

    /// One line per group: label, size and scale.
    pub fn describe(&self) -> String {
        let mut s = String::new();
        for g in self.groups() {
            let _ = writeln!(s, "{:<28} n={:<6} sigma={:.6}", g.label(&self.features), g.n(), g.sigma);
        }
        s
    }
}
