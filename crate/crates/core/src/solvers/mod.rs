//! Linear model fitting: OLS, ridge, lasso, adaptive lasso and quantile
//! regression.
//!
//! Every solver takes a [`DesignMatrix`] and a target aligned to its rows.
//! Rows flagged unusable, or with a non-finite target, are skipped. A column
//! named `intercept` is treated as the unpenalized intercept; all other
//! columns are standardized internally for the penalized fits and the
//! coefficients reported on the original scale.

mod lasso;
mod ols;
mod quantile;
mod ridge;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::features::DesignMatrix;

pub use lasso::{adaptive_lasso_weights, fit_adaptive_lasso, fit_lasso, fit_lasso_with, lasso_lambda_max};
pub use ols::fit_ols;
pub use quantile::{fit_quantile, fit_quantile_with, pinball_loss, smoothed_pinball_gradient, smoothed_pinball_objective};
pub use ridge::{fit_ridge, fit_ridge_with};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("design is rank deficient ({0}); consider ridge")]
    RankDeficient(String),
    #[error("too few usable rows: {rows} (need {needed})")]
    TooFewRows { rows: usize, needed: usize },
    #[error("column mismatch: {0}")]
    ColumnMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    None,
    Ridge,
    Lasso,
    AdaptiveLasso,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub adaptive_gamma: f64,
    /// Explicit per-column weights for the adaptive lasso, one per
    /// non-intercept column. When absent they come from a ridge pilot fit.
    pub adaptive_weights: Option<Vec<f64>>,
}

impl PenaltySpec {
    pub fn none() -> Self {
        Self { kind: PenaltyKind::None, lambda: 0.0, adaptive_gamma: 1.0, adaptive_weights: None }
    }

    pub fn ridge(lambda: f64) -> Self {
        Self { kind: PenaltyKind::Ridge, lambda, ..Self::none() }
    }

    pub fn lasso(lambda: f64) -> Self {
        Self { kind: PenaltyKind::Lasso, lambda, ..Self::none() }
    }

    pub fn adaptive_lasso(lambda: f64, gamma: f64) -> Self {
        Self { kind: PenaltyKind::AdaptiveLasso, lambda, adaptive_gamma: gamma, adaptive_weights: None }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.adaptive_weights = Some(weights);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Center and scale non-intercept columns before a penalized fit.
    pub standardize: bool,
    /// Per non-intercept column penalty multipliers; 0 leaves a column
    /// unpenalized.
    pub penalty_factors: Option<Vec<f64>>,
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { standardize: true, penalty_factors: None, max_sweeps: 10_000, tol: 1e-7 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitMethod {
    Ols,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    AdaptiveLasso { lambda: f64, gamma: f64 },
    Quantile { q: f64, lambda: f64 },
}

impl FitMethod {
    pub fn label(&self) -> String {
        match self {
            FitMethod::Ols => "ols".into(),
            FitMethod::Ridge { lambda } => format!("ridge(lambda={lambda})"),
            FitMethod::Lasso { lambda } => format!("lasso(lambda={lambda})"),
            FitMethod::AdaptiveLasso { lambda, gamma } => format!("adaptive_lasso(lambda={lambda}, gamma={gamma})"),
            FitMethod::Quantile { q, lambda } => format!("quantile(q={q}, lambda={lambda})"),
        }
    }
}

/// Classical OLS inference for one coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefStat {
    pub stderr: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub df: usize,
    pub sigma: f64,
    pub intercept: Option<CoefStat>,
    pub coefficients: Vec<CoefStat>,
}

/// A fitted linear model. Coefficients are keyed by design column name and
/// expressed on the original column scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub method: FitMethod,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub has_intercept: bool,
    pub intercept: f64,
    /// Design rows used for fitting.
    pub rows: Vec<usize>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub n: usize,
    pub p: usize,
    /// Objective value at the solution.
    pub loss: f64,
    pub inference: Option<Inference>,
    pub converged: bool,
    pub iterations: usize,
    /// Columns dropped as constant (coefficient fixed at zero).
    pub dropped: Vec<String>,
}

impl LinearFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        if name == INTERCEPT && self.has_intercept {
            return Some(self.intercept);
        }
        self.names.iter().position(|n| n == name).map(|j| self.coefficients[j])
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum()
    }
}

pub(crate) const INTERCEPT: &str = "intercept";

/// Raw training data extracted from a design matrix.
pub(crate) struct Prepared {
    pub rows: Vec<usize>,
    pub names: Vec<String>,
    pub has_intercept: bool,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

pub(crate) fn prepare(design: &DesignMatrix, y: &[f64]) -> Result<Prepared, SolverError> {
    if y.len() != design.nrows() {
        return Err(SolverError::ColumnMismatch(format!(
            "target has {} rows, design has {}",
            y.len(),
            design.nrows()
        )));
    }
    let rows: Vec<usize> = (0..design.nrows()).filter(|&i| design.usable()[i] && y[i].is_finite()).collect();
    let cols: Vec<usize> = (0..design.ncols()).filter(|&j| design.names()[j] != INTERCEPT).collect();
    let has_intercept = cols.len() < design.ncols();
    let data = design.data();
    let x = DMatrix::from_fn(rows.len(), cols.len(), |i, j| data[(rows[i], cols[j])]);
    let yv = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
    let names = cols.iter().map(|&j| design.names()[j].clone()).collect();
    Ok(Prepared { rows, names, has_intercept, x, y: yv })
}

/// Column centering/scaling applied before penalized fits. Only `active`
/// columns enter the standardized matrix.
pub(crate) struct Scaling {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
    pub active: Vec<usize>,
}

impl Scaling {
    pub fn new(x: &DMatrix<f64>, has_intercept: bool, standardize: bool) -> Self {
        let n = x.nrows().max(1) as f64;
        let mut center = vec![0.0; x.ncols()];
        let mut scale = vec![1.0; x.ncols()];
        let mut active = Vec::new();
        for j in 0..x.ncols() {
            let col = x.column(j);
            let mean = col.sum() / n;
            let max_abs = col.amax();
            let spread = if has_intercept {
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
            } else {
                (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt()
            };
            if spread <= 1e-12 * max_abs.max(f64::MIN_POSITIVE) || max_abs == 0.0 {
                continue;
            }
            if has_intercept {
                center[j] = mean;
            }
            if standardize {
                scale[j] = spread;
            }
            active.push(j);
        }
        Self { center, scale, active }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), self.active.len(), |i, k| {
            let j = self.active[k];
            (x[(i, j)] - self.center[j]) / self.scale[j]
        })
    }

    /// Maps standardized coefficients back to the original columns.
    pub fn unscale(&self, ncols: usize, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; ncols];
        for (k, &j) in self.active.iter().enumerate() {
            out[j] = beta[k] / self.scale[j];
        }
        out
    }

    pub fn dropped(&self, names: &[String]) -> Vec<String> {
        (0..names.len()).filter(|j| !self.active.contains(j)).map(|j| names[j].clone()).collect()
    }
}

/// Residuals and fitted values on the original scale.
pub(crate) fn residuals(p: &Prepared, intercept: f64, beta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let b = DVector::from_column_slice(beta);
    let fitted = &p.x * b;
    let fitted: Vec<f64> = fitted.iter().map(|v| v + intercept).collect();
    let resid = p.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    (fitted, resid)
}

pub(crate) fn check_factors(opts: &FitOptions, p: usize) -> Result<Vec<f64>, SolverError> {
    match &opts.penalty_factors {
        None => Ok(vec![1.0; p]),
        Some(f) if f.len() != p => Err(SolverError::ColumnMismatch(format!(
            "{} penalty factors for {p} columns",
            f.len()
        ))),
        Some(f) if f.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
            Err(SolverError::InvalidParameter("penalty factors must be finite and non-negative".into()))
        }
        Some(f) => Ok(f.clone()),
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<(), SolverError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(SolverError::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")))
    }
}

/// `intercept + X·β`, matching columns by name so column order does not
/// matter. The design's own `intercept` column is ignored.
pub fn predict_linear(fit: &LinearFit, x: &DesignMatrix) -> Result<Vec<f64>, SolverError> {
    let idx = fit
        .names
        .iter()
        .map(|n| x.column_index(n).ok_or_else(|| SolverError::ColumnMismatch(format!("column `{n}` missing"))))
        .collect::<Result<Vec<_>, _>>()?;
    let data = x.data();
    Ok((0..x.nrows())
        .map(|i| {
            let mut v = if fit.has_intercept { fit.intercept } else { 0.0 };
            for (j, &c) in idx.iter().enumerate() {
                v += fit.coefficients[j] * data[(i, c)];
            }
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prediction_is_keyed_by_name() {
        let x = DesignMatrix::from_rows(&["intercept", "a", "b"], &[vec![1.0, 1.0, 2.0], vec![1.0, 3.0, 1.0], vec![1.0, 0.0, 5.0], vec![1.0, 2.0, 2.0]]).unwrap();
        let y = [3.0, 4.5, 6.0, 5.0];
        let fit = fit_ols(&x, &y).unwrap();
        let perm = DesignMatrix::from_rows(&["b", "a"], &[vec![2.0, 1.0], vec![1.0, 3.0], vec![5.0, 0.0], vec![2.0, 2.0]]).unwrap();
        let a = predict_linear(&fit, &x).unwrap();
        let b = predict_linear(&fit, &perm).unwrap();
        assert_eq!(a, b);
        for (i, r) in fit.residuals.iter().enumerate() {
            assert!((y[i] - a[i] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix_predicts_intercept() {
        let x = DesignMatrix::from_rows(&["intercept", "a"], &[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let fit = fit_ols(&x, &[1.0, 2.0, 4.0]).unwrap();
        let zero = DesignMatrix::from_rows(&["a"], &[vec![0.0], vec![0.0]]).unwrap();
        let pred = predict_linear(&fit, &zero).unwrap();
        assert_eq!(pred, [fit.intercept, fit.intercept]);
    }

    #[test]
    fn missing_column_is_reported() {
        let x = DesignMatrix::from_rows(&["intercept", "a"], &[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let fit = fit_ols(&x, &[1.0, 2.0, 4.0]).unwrap();
        let other = DesignMatrix::from_rows(&["b"], &[vec![0.0]]).unwrap();
        assert!(matches!(predict_linear(&fit, &other), Err(SolverError::ColumnMismatch(_))));
    }

    #[test]
    fn unusable_rows_are_skipped() {
        let mut x = DesignMatrix::from_rows(&["intercept"], &[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        x = x.select_rows(&[0, 1, 2]);
        let fit = fit_ols(&x, &[1.0, f64::NAN, 3.0]).unwrap();
        assert_eq!(fit.rows, [0, 2]);
        assert!((fit.intercept - 2.0).abs() < 1e-14);
    }
}
