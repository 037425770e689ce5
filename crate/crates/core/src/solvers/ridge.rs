use nalgebra::{DMatrix, DVector};

use super::{check_factors, check_lambda, prepare, residuals, FitMethod, FitOptions, LinearFit, Scaling, SolverError};
use crate::features::DesignMatrix;

/// Ridge regression minimizing Σ(y − Xβ)² + λΣβⱼ² over the standardized
/// non-intercept columns, solved in closed form.
pub fn fit_ridge(x: &DesignMatrix, y: &[f64], lambda: f64) -> Result<LinearFit, SolverError> {
    fit_ridge_with(x, y, lambda, &FitOptions::default())
}

pub fn fit_ridge_with(x: &DesignMatrix, y: &[f64], lambda: f64, opts: &FitOptions) -> Result<LinearFit, SolverError> {
    check_lambda(lambda)?;
    let p = prepare(x, y)?;
    let n = p.rows.len();
    if n < 2 {
        return Err(SolverError::TooFewRows { rows: n, needed: 2 });
    }
    let factors = check_factors(opts, p.x.ncols())?;
    let scaling = Scaling::new(&p.x, p.has_intercept, opts.standardize);
    let z = scaling.apply(&p.x);
    let ymean = if p.has_intercept { p.y.mean() } else { 0.0 };
    let yc = p.y.add_scalar(-ymean);
    let pen: Vec<f64> = scaling.active.iter().map(|&j| lambda * factors[j]).collect();
    let bs = ridge_solve(&z, &yc, &pen)?;

    let beta = scaling.unscale(p.x.ncols(), bs.as_slice());
    let intercept = if p.has_intercept {
        ymean - beta.iter().zip(&scaling.center).map(|(b, c)| b * c).sum::<f64>()
    } else {
        0.0
    };
    let (fitted, resid) = residuals(&p, intercept, &beta);
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let penalty: f64 = bs.iter().zip(&pen).map(|(b, l)| l * b * b).sum();
    let dropped = scaling.dropped(&p.names);
    Ok(LinearFit {
        method: FitMethod::Ridge { lambda },
        names: p.names,
        coefficients: beta,
        has_intercept: p.has_intercept,
        intercept,
        rows: p.rows,
        fitted,
        residuals: resid,
        n,
        p: scaling.active.len() + usize::from(p.has_intercept),
        loss: rss + penalty,
        inference: None,
        converged: true,
        iterations: 1,
        dropped,
    })
}

/// Solves (ZᵀZ + diag(pen))β = Zᵀy by Cholesky.
pub(crate) fn ridge_solve(z: &DMatrix<f64>, y: &DVector<f64>, pen: &[f64]) -> Result<DVector<f64>, SolverError> {
    if z.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let mut gram = z.tr_mul(z);
    for (j, l) in pen.iter().enumerate() {
        gram[(j, j)] += l;
    }
    let rhs = z.tr_mul(y);
    let chol = gram
        .cholesky()
        .ok_or_else(|| SolverError::RankDeficient("penalized Gram matrix is not positive definite".into()))?;
    Ok(chol.solve(&rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::fit_ols;

    #[test]
    fn one_column_closed_form() {
        let x = DesignMatrix::from_rows(&["x"], &[vec![1.0], vec![2.0]]).unwrap();
        let opts = FitOptions { standardize: false, ..Default::default() };
        let fit = fit_ridge_with(&x, &[1.0, 2.0], 1.0, &opts).unwrap();
        // (1 + 4 + 1)^-1 (1 + 4)
        assert!((fit.coefficients[0] - 5.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn zero_lambda_matches_ols() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, i as f64, ((i * 7) % 5) as f64]).collect();
        let x = DesignMatrix::from_rows(&["intercept", "a", "b"], &rows).unwrap();
        let y: Vec<f64> = (0..20).map(|i| 1.0 + 0.5 * i as f64 + ((i * 3) % 4) as f64).collect();
        let r = fit_ridge(&x, &y, 0.0).unwrap();
        let o = fit_ols(&x, &y).unwrap();
        assert!((r.intercept - o.intercept).abs() < 1e-8);
        for (a, b) in r.coefficients.iter().zip(&o.coefficients) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn huge_lambda_shrinks_to_mean() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let x = DesignMatrix::from_rows(&["intercept", "a"], &rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| 3.0 * i as f64).collect();
        let fit = fit_ridge(&x, &y, 1e12).unwrap();
        assert!(fit.coefficients[0].abs() < 1e-8);
        assert!((fit.intercept - 13.5).abs() < 1e-6);
    }

    #[test]
    fn needs_two_rows() {
        let x = DesignMatrix::from_rows(&["intercept"], &[vec![1.0]]).unwrap();
        assert_eq!(fit_ridge(&x, &[1.0], 1.0).unwrap_err(), SolverError::TooFewRows { rows: 1, needed: 2 });
    }

    #[test]
    fn unpenalized_factor_matches_ols_for_that_column() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![1.0, i as f64]).collect();
        let x = DesignMatrix::from_rows(&["intercept", "a"], &rows).unwrap();
        let y: Vec<f64> = (0..30).map(|i| 2.0 + 0.3 * i as f64).collect();
        let opts = FitOptions { penalty_factors: Some(vec![0.0]), ..Default::default() };
        let fit = fit_ridge_with(&x, &y, 1e6, &opts).unwrap();
        assert!((fit.coefficients[0] - 0.3).abs() < 1e-10);
    }
}
