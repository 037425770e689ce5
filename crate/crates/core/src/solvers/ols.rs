use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{prepare, residuals, CoefStat, FitMethod, Inference, LinearFit, SolverError};
use crate::features::DesignMatrix;

/// Ordinary least squares via a column-scaled SVD, with classical
/// standard errors, t statistics and two-sided p-values on n − p degrees of
/// freedom. All-zero columns are dropped (coefficient 0, no inference).
pub fn fit_ols(x: &DesignMatrix, y: &[f64]) -> Result<LinearFit, SolverError> {
    let p = prepare(x, y)?;
    let n = p.rows.len();
    let kept: Vec<usize> = (0..p.x.ncols()).filter(|&j| p.x.column(j).amax() > 0.0).collect();
    let width = kept.len() + usize::from(p.has_intercept);
    if n == 0 || n < width {
        return Err(SolverError::TooFewRows { rows: n, needed: width.max(1) });
    }

    let offset = usize::from(p.has_intercept);
    let full = DMatrix::from_fn(n, width, |i, j| {
        if p.has_intercept && j == 0 {
            1.0
        } else {
            p.x[(i, kept[j - offset])]
        }
    });
    let norms: Vec<f64> = (0..width).map(|j| full.column(j).norm()).collect();
    let mut a = full;
    for (j, nrm) in norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / nrm);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * smax {
        let rank = svd.singular_values.iter().filter(|s| **s > 1e-10 * smax).count();
        return Err(SolverError::RankDeficient(format!("rank {rank} < {width} columns")));
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let solve = |rhs: &DVector<f64>| -> DVector<f64> {
        let mut c = u.transpose() * rhs;
        for (k, s) in svd.singular_values.iter().enumerate() {
            c[k] /= s;
        }
        v_t.transpose() * c
    };
    let mut b = solve(&p.y);
    // One step of iterative refinement.
    let r = &p.y - &a * &b;
    b += solve(&r);

    let mut beta = vec![0.0; p.x.ncols()];
    let mut intercept = 0.0;
    for j in 0..width {
        let coef = b[j] / norms[j];
        if p.has_intercept && j == 0 {
            intercept = coef;
        } else {
            beta[kept[j - offset]] = coef;
        }
    }
    let (fitted, resid) = residuals(&p, intercept, &beta);
    let rss: f64 = resid.iter().map(|r| r * r).sum();

    let df = n - width;
    let inference = if df > 0 {
        let sigma2 = rss / df as f64;
        let tdist = StudentsT::new(0.0, 1.0, df as f64).expect("df > 0");
        let mut diag = vec![0.0; width];
        for (j, d) in diag.iter_mut().enumerate() {
            *d = (0..width).map(|k| (v_t[(k, j)] / svd.singular_values[k]).powi(2)).sum::<f64>() / norms[j].powi(2);
        }
        let stat = |coef: f64, d: f64| {
            let stderr = (sigma2 * d).sqrt();
            let t = coef / stderr;
            let pval = if t.is_finite() { 2.0 * (1.0 - tdist.cdf(t.abs())) } else { 0.0 };
            CoefStat { stderr, t, p: pval }
        };
        let nan = CoefStat { stderr: f64::NAN, t: f64::NAN, p: f64::NAN };
        let mut coefficients = vec![nan; p.x.ncols()];
        for (k, &j) in kept.iter().enumerate() {
            coefficients[j] = stat(beta[j], diag[k + offset]);
        }
        Some(Inference {
            df,
            sigma: sigma2.sqrt(),
            intercept: p.has_intercept.then(|| stat(intercept, diag[0])),
            coefficients,
        })
    } else {
        None
    };

    let dropped = (0..p.x.ncols()).filter(|j| !kept.contains(j)).map(|j| p.names[j].clone()).collect();
    Ok(LinearFit {
        method: FitMethod::Ols,
        names: p.names,
        coefficients: beta,
        has_intercept: p.has_intercept,
        intercept,
        rows: p.rows,
        fitted,
        residuals: resid,
        n,
        p: width,
        loss: rss,
        inference,
        converged: true,
        iterations: 1,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intercept_only_is_mean() {
        let x = DesignMatrix::from_rows(&["intercept"], &[vec![1.0], vec![1.0]]).unwrap();
        let fit = fit_ols(&x, &[1.0, 3.0]).unwrap();
        assert!((fit.intercept - 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let x = DesignMatrix::from_rows(&["x"], &rows).unwrap();
        let y: Vec<f64> = (0..5).map(|i| 2.0 * i as f64).collect();
        let fit = fit_ols(&x, &y).unwrap();
        assert!((fit.coefficient("x").unwrap() - 2.0).abs() < 1e-12);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn duplicated_column_is_rank_deficient() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, i as f64]).collect();
        let x = DesignMatrix::from_rows(&["intercept", "a", "b"], &rows).unwrap();
        let y: Vec<f64> = (0..6).map(|i| i as f64).collect();
        assert!(matches!(fit_ols(&x, &y), Err(SolverError::RankDeficient(_))));
    }

    #[test]
    fn too_few_rows() {
        let x = DesignMatrix::from_rows(&["intercept", "a"], &[vec![1.0, 2.0]]).unwrap();
        assert_eq!(fit_ols(&x, &[1.0]).unwrap_err(), SolverError::TooFewRows { rows: 1, needed: 2 });
    }

    #[test]
    fn zero_column_is_dropped() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![1.0, i as f64, 0.0]).collect();
        let x = DesignMatrix::from_rows(&["intercept", "a", "event"], &rows).unwrap();
        let fit = fit_ols(&x, &[1.0, 2.0, 3.5, 4.0]).unwrap();
        assert_eq!(fit.dropped, ["event"]);
        assert_eq!(fit.coefficient("event"), Some(0.0));
        assert!(fit.inference.unwrap().coefficients[1].p.is_nan());
    }

    #[test]
    fn inference_matches_simple_regression_formulas() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ys = [1.1, 1.9, 3.2, 3.8, 5.3, 5.9];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&v| vec![1.0, v]).collect();
        let x = DesignMatrix::from_rows(&["intercept", "x"], &rows).unwrap();
        let fit = fit_ols(&x, &ys).unwrap();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|v| (v - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let slope = sxy / sxx;
        let rss: f64 = xs.iter().zip(&ys).map(|(a, b)| (b - (my + slope * (a - mx))).powi(2)).sum();
        let se = (rss / (n - 2.0) / sxx).sqrt();
        let inf = fit.inference.unwrap();
        assert!((fit.coefficients[0] - slope).abs() < 1e-12);
        assert!((inf.coefficients[0].stderr - se).abs() < 1e-12);
        assert_eq!(inf.df, 4);
    }
}
