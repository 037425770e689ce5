//! Basis functions of the additive mean model and design-matrix assembly.

mod design;
mod events;
mod fourier;
mod growth;
mod interactions;
mod lags;
mod time;

use nalgebra::DMatrix;
use thiserror::Error;

pub use design::{build_design_matrix, DesignLayout, FeatureConfig, RegressorMode, RegressorSpec, RowInputs};
pub use events::{event_indicators, sanitize_name, EventSpec};
pub use fourier::{fourier_terms, seasonality_cp_basis, SeasonalPeriod, SeasonalitySpec};
pub use growth::{growth_basis, GrowthFunction, GrowthSpec};
pub use interactions::{interaction_terms, pattern_matches, InteractionSpec};
pub use lags::{avg_lag_name, lag_features, lag_name, LagSpec};
pub use time::{time_features, TimeFeature};

pub(crate) use fourier::fourier_value;
pub(crate) use growth::hinge;

use crate::series::Timestamp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("changepoint out of range or not increasing: {0}")]
    ChangepointOutOfRange(String),
    #[error("interaction pattern `{0}` matches no generated column")]
    PatternUnmatched(String),
    #[error("duplicate column name `{0}`")]
    DuplicateColumnName(String),
    #[error("regressor `{0}` is not present in the input data")]
    UnknownRegressor(String),
    #[error("invalid feature spec: {0}")]
    InvalidSpec(String),
    #[error("column count {columns} does not match name count {names}")]
    ShapeMismatch { columns: usize, names: usize },
}

/// A named feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

pub(crate) fn check_changepoints(cps: &[Timestamp], lo: Timestamp, hi: Timestamp) -> Result<(), FeatureError> {
    for (i, cp) in cps.iter().enumerate() {
        if *cp < lo || *cp > hi {
            return Err(FeatureError::ChangepointOutOfRange(format!("{cp} is outside [{lo}, {hi}]")));
        }
        if i > 0 && cps[i - 1] >= *cp {
            return Err(FeatureError::ChangepointOutOfRange(format!("{cp} does not follow {}", cps[i - 1])));
        }
    }
    Ok(())
}

/// The additive group a column contributes to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentGroup {
    Intercept,
    Trend,
    Seasonality(String),
    Events,
    Autoregression,
    Regressors,
    Interactions,
}

impl ComponentGroup {
    /// Best-effort grouping from a generated column name.
    pub fn infer(name: &str) -> Self {
        let is_cp = |s: &str| {
            s.strip_prefix("cp")
                .and_then(|r| r.split_once('_'))
                .is_some_and(|(d, _)| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        };
        let fourier_tag = |s: &str| -> Option<String> {
            let rest = s.strip_prefix("sin").or_else(|| s.strip_prefix("cos"))?;
            let (d, tag) = rest.split_once('_')?;
            (!d.is_empty() && d.bytes().all(|b| b.is_ascii_digit())).then(|| tag.to_string())
        };
        if name == "intercept" {
            ComponentGroup::Intercept
        } else if name.contains(':') {
            ComponentGroup::Interactions
        } else if name.starts_with("growth_") || is_cp(name) {
            ComponentGroup::Trend
        } else if let Some(tag) = fourier_tag(name) {
            ComponentGroup::Seasonality(tag)
        } else if let Some(tag) = name
            .strip_prefix("scp")
            .and_then(|r| r.split_once('_'))
            .and_then(|(_, c)| fourier_tag(c))
        {
            ComponentGroup::Seasonality(tag)
        } else if name.starts_with("y_lag") || name.starts_with("y_avglag_") {
            ComponentGroup::Autoregression
        } else if TimeFeature::from_name(name).is_some() {
            ComponentGroup::Events
        } else {
            ComponentGroup::Regressors
        }
    }
}

/// Named feature columns aligned to a timestamp grid, with a per-row flag
/// marking rows usable for fitting (no missing inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    names: Vec<String>,
    groups: Vec<ComponentGroup>,
    data: DMatrix<f64>,
    usable: Vec<bool>,
}

impl DesignMatrix {
    pub fn new(names: Vec<String>, data: DMatrix<f64>) -> Result<Self, FeatureError> {
        let groups = names.iter().map(|n| ComponentGroup::infer(n)).collect();
        Self::with_groups(names, groups, data, None)
    }

    pub(crate) fn with_groups(
        names: Vec<String>,
        groups: Vec<ComponentGroup>,
        data: DMatrix<f64>,
        usable: Option<Vec<bool>>,
    ) -> Result<Self, FeatureError> {
        if names.len() != data.ncols() {
            return Err(FeatureError::ShapeMismatch { columns: data.ncols(), names: names.len() });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(FeatureError::DuplicateColumnName(dup.clone()));
        }
        let usable = usable.unwrap_or_else(|| vec![true; data.nrows()]);
        Ok(Self { names, groups, data, usable })
    }

    /// Convenience constructor from row-major data.
    pub fn from_rows(names: &[&str], rows: &[Vec<f64>]) -> Result<Self, FeatureError> {
        let ncols = names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(FeatureError::ShapeMismatch { columns: bad.len(), names: ncols });
        }
        let data = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::new(names.iter().map(|s| s.to_string()).collect(), data)
    }

    /// Convenience constructor from named columns.
    pub fn from_columns(columns: &[Column]) -> Result<Self, FeatureError> {
        let nrows = columns.first().map_or(0, |c| c.values.len());
        let data = DMatrix::from_fn(nrows, columns.len(), |i, j| columns[j].values[i]);
        Self::new(columns.iter().map(|c| c.name.clone()).collect(), data)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn groups(&self) -> &[ComponentGroup] {
        &self.groups
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn usable(&self) -> &[bool] {
        &self.usable
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.column_index(name).map(|j| self.data.column(j).iter().copied().collect())
    }

    pub(crate) fn with_usable(mut self, usable: Vec<bool>) -> Self {
        assert_eq!(usable.len(), self.nrows());
        self.usable = usable;
        self
    }

    /// Row subset, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        let data = self.data.select_rows(rows);
        let usable = rows.iter().map(|&i| self.usable[i]).collect();
        Self { names: self.names.clone(), groups: self.groups.clone(), data, usable }
    }

    /// Indices of rows flagged usable.
    pub fn usable_rows(&self) -> Vec<usize> {
        (0..self.nrows()).filter(|&i| self.usable[i]).collect()
    }
}
