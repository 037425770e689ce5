use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::ridge::ridge_solve;
use super::{
    check_factors, check_lambda, prepare, residuals, FitMethod, FitOptions, LinearFit, PenaltyKind, PenaltySpec,
    Prepared, Scaling, SolverError,
};
use crate::features::DesignMatrix;

const PILOT_RATIO: f64 = 1e-4;
const WEIGHT_EPS: f64 = 1e-8;

/// Lasso minimizing ½n⁻¹Σ(y − Xβ)² + λΣ|βⱼ| by cyclic coordinate descent
/// on standardized columns. Hitting the sweep limit is not an error: the
/// last iterate is returned with `converged = false`.
pub fn fit_lasso(x: &DesignMatrix, y: &[f64], lambda: f64) -> Result<LinearFit, SolverError> {
    fit_lasso_with(x, y, &PenaltySpec::lasso(lambda), &FitOptions::default())
}

/// Adaptive lasso: a ridge pilot fit gives weights wⱼ = 1/(|β̂ⱼ|^γ + ε),
/// then a lasso with per-column penalties λwⱼ.
pub fn fit_adaptive_lasso(x: &DesignMatrix, y: &[f64], lambda: f64, gamma: f64) -> Result<LinearFit, SolverError> {
    fit_lasso_with(x, y, &PenaltySpec::adaptive_lasso(lambda, gamma), &FitOptions::default())
}

/// Standardized problem with unpenalized columns projected out.
struct Space {
    prepared: Prepared,
    scaling: Scaling,
    /// Positions within `scaling.active` of penalized / unpenalized columns.
    pen: Vec<usize>,
    unpen: Vec<usize>,
    factors: Vec<f64>,
    z: DMatrix<f64>,
    ymean: f64,
    yc: DVector<f64>,
    zu: DMatrix<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    zp: DMatrix<f64>,
    yt: DVector<f64>,
}

impl Space {
    fn new(x: &DesignMatrix, y: &[f64], opts: &FitOptions) -> Result<Self, SolverError> {
        let prepared = prepare(x, y)?;
        let n = prepared.rows.len();
        if n < 2 {
            return Err(SolverError::TooFewRows { rows: n, needed: 2 });
        }
        let factors = check_factors(opts, prepared.x.ncols())?;
        let scaling = Scaling::new(&prepared.x, prepared.has_intercept, opts.standardize);
        let z = scaling.apply(&prepared.x);
        let ymean = if prepared.has_intercept { prepared.y.mean() } else { 0.0 };
        let yc = prepared.y.add_scalar(-ymean);
        let (pen, unpen): (Vec<usize>, Vec<usize>) =
            (0..scaling.active.len()).partition(|&k| factors[scaling.active[k]] > 0.0);
        let zu = z.select_columns(&unpen);
        let zp0 = z.select_columns(&pen);
        let (chol, zp, yt) = if unpen.is_empty() {
            (None, zp0, yc.clone())
        } else {
            let chol = zu
                .tr_mul(&zu)
                .cholesky()
                .ok_or_else(|| SolverError::RankDeficient("unpenalized columns are collinear".into()))?;
            let proj_m = |m: &DMatrix<f64>| m - &zu * chol.solve(&zu.tr_mul(m));
            let proj_v = |v: &DVector<f64>| v - &zu * chol.solve(&zu.tr_mul(v));
            (Some(chol.clone()), proj_m(&zp0), proj_v(&yc))
        };
        Ok(Self { prepared, scaling, pen, unpen, factors, z, ymean, yc, zu, chol, zp, yt })
    }

    fn n(&self) -> f64 {
        self.prepared.rows.len() as f64
    }

    fn gradient(&self) -> DVector<f64> {
        self.zp.tr_mul(&self.yt) / self.n()
    }

    fn pilot_weights(&self, gamma: f64) -> Result<Vec<f64>, SolverError> {
        let lmax = self.gradient().amax();
        let pen = vec![PILOT_RATIO * lmax; self.pen.len()];
        let pilot = ridge_solve(&self.zp, &self.yt, &pen)?;
        Ok(pilot.iter().map(|b| 1.0 / (b.abs().powf(gamma) + WEIGHT_EPS)).collect())
    }

    /// Per-column weights for penalized columns from explicit full-width
    /// weights.
    fn explicit_weights(&self, w: &[f64]) -> Result<Vec<f64>, SolverError> {
        if w.len() != self.prepared.x.ncols() {
            return Err(SolverError::ColumnMismatch(format!(
                "{} adaptive weights for {} columns",
                w.len(),
                self.prepared.x.ncols()
            )));
        }
        if w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(SolverError::InvalidParameter("adaptive weights must be positive and finite".into()));
        }
        Ok(self.pen.iter().map(|&k| w[self.scaling.active[k]]).collect())
    }

    fn penalties(&self, weights: &[f64]) -> Vec<f64> {
        self.pen.iter().zip(weights).map(|(&k, w)| w * self.factors[self.scaling.active[k]]).collect()
    }
}

/// Smallest λ at which every penalized coefficient is zero, for the given
/// per-column weights (defaults to 1).
pub fn lasso_lambda_max(
    x: &DesignMatrix,
    y: &[f64],
    opts: &FitOptions,
    weights: Option<&[f64]>,
) -> Result<f64, SolverError> {
    let space = Space::new(x, y, opts)?;
    let w = match weights {
        Some(w) => space.explicit_weights(w)?,
        None => vec![1.0; space.pen.len()],
    };
    let pens = space.penalties(&w);
    Ok(space.gradient().iter().zip(&pens).map(|(g, p)| g.abs() / p).fold(0.0, f64::max))
}

/// Adaptive-lasso weights from the ridge pilot, one per non-intercept
/// column. Columns that are unpenalized or constant get weight 1.
pub fn adaptive_lasso_weights(
    x: &DesignMatrix,
    y: &[f64],
    gamma: f64,
    opts: &FitOptions,
) -> Result<Vec<f64>, SolverError> {
    let space = Space::new(x, y, opts)?;
    let w = space.pilot_weights(gamma)?;
    let mut out = vec![1.0; space.prepared.x.ncols()];
    for (i, &k) in space.pen.iter().enumerate() {
        out[space.scaling.active[k]] = w[i];
    }
    Ok(out)
}

pub fn fit_lasso_with(
    x: &DesignMatrix,
    y: &[f64],
    penalty: &PenaltySpec,
    opts: &FitOptions,
) -> Result<LinearFit, SolverError> {
    let lambda = penalty.lambda;
    check_lambda(lambda)?;
    let space = Space::new(x, y, opts)?;
    let (weights, method) = match penalty.kind {
        PenaltyKind::AdaptiveLasso => {
            let g = penalty.adaptive_gamma;
            if !(g.is_finite() && g > 0.0) {
                return Err(SolverError::InvalidParameter(format!("gamma must be > 0, got {g}")));
            }
            let w = match &penalty.adaptive_weights {
                Some(w) => space.explicit_weights(w)?,
                None => space.pilot_weights(g)?,
            };
            (w, FitMethod::AdaptiveLasso { lambda, gamma: g })
        }
        PenaltyKind::Lasso => (vec![1.0; space.pen.len()], FitMethod::Lasso { lambda }),
        other => return Err(SolverError::InvalidParameter(format!("{other:?} is not a lasso penalty"))),
    };
    let pens: Vec<f64> = space.penalties(&weights).iter().map(|w| w * lambda).collect();
    let cd = coordinate_descent(&space.zp, &space.yt, &pens, opts.max_sweeps, opts.tol);

    let mut bs = vec![0.0; space.scaling.active.len()];
    for (i, &k) in space.pen.iter().enumerate() {
        bs[k] = cd.beta[i];
    }
    if let Some(chol) = &space.chol {
        let bp = DVector::from_iterator(space.pen.len(), space.pen.iter().map(|&k| bs[k]));
        let zp0 = space.z.select_columns(&space.pen);
        let partial = &space.yc - zp0 * bp;
        let bu = chol.solve(&space.zu.tr_mul(&partial));
        for (i, &k) in space.unpen.iter().enumerate() {
            bs[k] = bu[i];
        }
    }

    let p = &space.prepared;
    let beta = space.scaling.unscale(p.x.ncols(), &bs);
    let intercept = if p.has_intercept {
        space.ymean - beta.iter().zip(&space.scaling.center).map(|(b, c)| b * c).sum::<f64>()
    } else {
        0.0
    };
    let (fitted, resid) = residuals(p, intercept, &beta);
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let l1: f64 = cd.beta.iter().zip(&pens).map(|(b, l)| l * b.abs()).sum();
    let nnz = bs.iter().filter(|b| **b != 0.0).count();
    if !cd.converged {
        log::warn!("lasso did not converge within {} sweeps", opts.max_sweeps);
    }
    let dropped = space.scaling.dropped(&p.names);
    let space_n = space.n();
    let Space { prepared, .. } = space;
    Ok(LinearFit {
        method,
        names: prepared.names,
        coefficients: beta,
        has_intercept: prepared.has_intercept,
        intercept,
        rows: prepared.rows,
        fitted,
        residuals: resid,
        n: space_n as usize,
        p: nnz + usize::from(prepared.has_intercept),
        loss: 0.5 * rss / space_n + l1,
        inference: None,
        converged: cd.converged,
        iterations: cd.sweeps,
        dropped,
    })
}

pub(crate) struct CdResult {
    pub beta: Vec<f64>,
    pub converged: bool,
    pub sweeps: usize,
}

#[inline]
fn soft_threshold(c: f64, t: f64) -> f64 {
    if c > t {
        c - t
    } else if c < -t {
        c + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for ½n⁻¹‖y − Zβ‖² + Σ penⱼ|βⱼ|. Stops when the
/// largest scaled coefficient change in a sweep is below `tol` and the KKT
/// conditions hold to the same tolerance.
pub(crate) fn coordinate_descent(
    z: &DMatrix<f64>,
    y: &DVector<f64>,
    pen: &[f64],
    max_sweeps: usize,
    tol: f64,
) -> CdResult {
    let n = z.nrows() as f64;
    let p = z.ncols();
    let a: Vec<f64> = (0..p).map(|j| z.column(j).norm_squared() / n).collect();
    let floor = 1e-12 * a.iter().cloned().fold(0.0, f64::max);
    let mut beta = vec![0.0; p];
    let mut r = y.clone();
    let mut sweeps = 0;
    let mut converged = p == 0;
    while !converged && sweeps < max_sweeps {
        sweeps += 1;
        let mut max_delta: f64 = 0.0;
        for j in 0..p {
            if a[j] <= floor {
                continue;
            }
            let col = z.column(j);
            let c = col.dot(&r) / n + a[j] * beta[j];
            let new = soft_threshold(c, pen[j]) / a[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                r.axpy(-delta, &col, 1.0);
                beta[j] = new;
                max_delta = max_delta.max(delta.abs() * a[j].sqrt());
            }
        }
        if max_delta < tol {
            converged = (0..p).all(|j| {
                if a[j] <= floor {
                    return true;
                }
                let g = z.column(j).dot(&r) / n;
                if beta[j] == 0.0 {
                    g.abs() <= pen[j] + tol
                } else {
                    (g - pen[j] * beta[j].signum()).abs() <= tol
                }
            });
        }
    }
    CdResult { beta, converged, sweeps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::fit_ols;

    fn design(rows: &[Vec<f64>], names: &[&str]) -> DesignMatrix {
        DesignMatrix::from_rows(names, rows).unwrap()
    }

    #[test]
    fn one_dimensional_soft_threshold() {
        // Already standardized column: mean 0, unit population variance.
        let xs = [-1.0, 1.0, -1.0, 1.0];
        let ys = [-2.0, 2.5, -1.5, 2.0];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v]).collect();
        let x = design(&rows, &["intercept", "x"]);
        let ols = xs.iter().zip(&ys).map(|(a, b)| a * b).sum::<f64>() / 4.0;
        for lambda in [0.0, 0.5, 1.9, 5.0] {
            let fit = fit_lasso(&x, &ys, lambda).unwrap();
            let expect = ols.signum() * (ols.abs() - lambda).max(0.0);
            assert!((fit.coefficients[0] - expect).abs() < 1e-12, "lambda {lambda}");
        }
    }

    #[test]
    fn zero_lambda_is_ols() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![1.0, i as f64, ((i * 7) % 11) as f64]).collect();
        let x = design(&rows, &["intercept", "a", "b"]);
        let y: Vec<f64> = (0..40).map(|i| 0.5 * i as f64 - ((i * 5) % 3) as f64).collect();
        let l = fit_lasso(&x, &y, 0.0).unwrap();
        let o = fit_ols(&x, &y).unwrap();
        for (a, b) in l.coefficients.iter().zip(&o.coefficients) {
            assert!((a - b).abs() < 1e-6);
        }
        assert!(l.converged);
    }

    #[test]
    fn lambda_max_zeroes_everything() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![1.0, i as f64, ((i * 7) % 11) as f64]).collect();
        let x = design(&rows, &["intercept", "a", "b"]);
        let y: Vec<f64> = (0..30).map(|i| (i as f64).sin() + 0.1 * i as f64).collect();
        let lmax = lasso_lambda_max(&x, &y, &FitOptions::default(), None).unwrap();
        let fit = fit_lasso(&x, &y, lmax).unwrap();
        assert!(fit.coefficients.iter().all(|b| *b == 0.0));
        let fit = fit_lasso(&x, &y, 0.9 * lmax).unwrap();
        assert!(fit.coefficients.iter().any(|b| *b != 0.0));
    }

    #[test]
    fn adaptive_weights_favor_large_pilots() {
        // Orthonormal-like standardized columns.
        let a = [1.0, -1.0, 1.0, -1.0];
        let b = [1.0, 1.0, -1.0, -1.0];
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![1.0, a[i], b[i]]).collect();
        let x = design(&rows, &["intercept", "a", "b"]);
        let y: Vec<f64> = (0..4).map(|i| 1.0 * a[i] + 1.0 * b[i]).collect();
        let lambda = 0.5;
        let pen = PenaltySpec::adaptive_lasso(lambda, 1.0).with_weights(vec![1.0 / 2.0, 1.0 / 0.01]);
        let fit = fit_lasso_with(&x, &y, &pen, &FitOptions::default()).unwrap();
        // Weighted soft threshold: 1 - 0.5 * 0.5 = 0.75; 1 - 0.5 * 100 < 0.
        assert!((fit.coefficients[0] - 0.75).abs() < 1e-12);
        assert_eq!(fit.coefficients[1], 0.0);
    }

    #[test]
    fn unpenalized_columns_are_not_shrunk() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![1.0, i as f64, ((i * 7) % 11) as f64]).collect();
        let x = design(&rows, &["intercept", "trend", "noise"]);
        let y: Vec<f64> = (0..50).map(|i| 2.0 + 0.3 * i as f64).collect();
        let opts = FitOptions { penalty_factors: Some(vec![0.0, 1.0]), ..Default::default() };
        let fit = fit_lasso_with(&x, &y, &PenaltySpec::lasso(100.0), &opts).unwrap();
        assert!((fit.coefficient("trend").unwrap() - 0.3).abs() < 1e-10);
        assert_eq!(fit.coefficient("noise"), Some(0.0));
        assert!((fit.intercept - 2.0).abs() < 1e-9);
    }
}
