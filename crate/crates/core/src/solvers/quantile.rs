use nalgebra::{DMatrix, DVector};

use super::{check_factors, check_lambda, prepare, residuals, FitMethod, FitOptions, LinearFit, Scaling, SolverError};
use crate::features::DesignMatrix;

const TAU_SCHEDULE: [f64; 3] = [1e-2, 1e-4, 1e-6];
const MAX_MM_STEPS: usize = 500;

/// Pinball loss Σ ρ_q(u), ρ_q(u) = u(q − 1{u<0}).
pub fn pinball_loss(residuals: &[f64], q: f64) -> f64 {
    residuals.iter().map(|&u| if u < 0.0 { u * (q - 1.0) } else { u * q }).sum()
}

#[inline]
fn huber(u: f64, tau: f64) -> f64 {
    if u.abs() <= tau {
        u * u / (2.0 * tau) + tau / 2.0
    } else {
        u.abs()
    }
}

/// Smoothed quantile objective Σ[h_τ(uᵢ)/2 + (q − ½)uᵢ] + λΣ_{penalized} βⱼ²
/// with u = y − Xβ and h_τ the Huber function at τ. It equals the pinball
/// objective wherever every |uᵢ| > τ.
pub fn smoothed_pinball_objective(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &[f64],
    q: f64,
    tau: f64,
    lambda: f64,
    penalized: &[bool],
) -> f64 {
    let u = DVector::from_column_slice(y) - x * DVector::from_column_slice(beta);
    let fit: f64 = u.iter().map(|&v| huber(v, tau) / 2.0 + (q - 0.5) * v).sum();
    let pen: f64 = beta.iter().zip(penalized).filter(|(_, p)| **p).map(|(b, _)| b * b).sum();
    fit + lambda * pen
}

/// Gradient of [`smoothed_pinball_objective`] with respect to β.
pub fn smoothed_pinball_gradient(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &[f64],
    q: f64,
    tau: f64,
    lambda: f64,
    penalized: &[bool],
) -> Vec<f64> {
    let u = DVector::from_column_slice(y) - x * DVector::from_column_slice(beta);
    let d = u.map(|v| {
        let h = if v.abs() <= tau { v / tau } else { v.signum() };
        -(h / 2.0 + (q - 0.5))
    });
    let g = x.tr_mul(&d);
    g.iter()
        .zip(beta.iter().zip(penalized))
        .map(|(gi, (b, p))| gi + if *p { 2.0 * lambda * b } else { 0.0 })
        .collect()
}

/// Quantile regression minimizing Σ ρ_q(y − Xβ) + λΣβⱼ² (intercept
/// unpenalized).
pub fn fit_quantile(x: &DesignMatrix, y: &[f64], q: f64, lambda: f64) -> Result<LinearFit, SolverError> {
    fit_quantile_with(x, y, q, lambda, &FitOptions::default())
}

/// Majorize-minimize iterations on the Huber-smoothed pinball objective for
/// a decreasing smoothing schedule, each step a weighted ridge solve.
pub fn fit_quantile_with(
    x: &DesignMatrix,
    y: &[f64],
    q: f64,
    lambda: f64,
    opts: &FitOptions,
) -> Result<LinearFit, SolverError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SolverError::InvalidParameter(format!("quantile level must be in (0, 1), got {q}")));
    }
    check_lambda(lambda)?;
    let p = prepare(x, y)?;
    let n = p.rows.len();
    if n == 0 {
        return Err(SolverError::TooFewRows { rows: 0, needed: 1 });
    }
    let factors = check_factors(opts, p.x.ncols())?;
    let scaling = Scaling::new(&p.x, p.has_intercept, opts.standardize);
    let z = scaling.apply(&p.x);
    let off = usize::from(p.has_intercept);
    let k = z.ncols() + off;
    let a = DMatrix::from_fn(n, k, |i, j| if j < off { 1.0 } else { z[(i, j - off)] });
    let penalized: Vec<bool> = (0..k).map(|j| j >= off).collect();
    let pen_diag: Vec<f64> = (0..k)
        .map(|j| if j < off { 0.0 } else { 2.0 * lambda * factors[scaling.active[j - off]] })
        .collect();
    let ys = p.y.as_slice();
    let true_obj = |b: &DVector<f64>| {
        let u = &p.y - &a * b;
        let pen: f64 = b.iter().zip(&pen_diag).map(|(v, d)| d / 2.0 * v * v).sum();
        pinball_loss(u.as_slice(), q) + pen
    };

    let sd = {
        let m = p.y.mean();
        (p.y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt()
    };
    let unit = if sd > 0.0 { sd } else { p.y.amax().max(1.0) };
    let ones = DVector::from_element(n, 1.0);
    let lin = a.tr_mul(&ones) * (q - 0.5);

    let solve = |w: &DVector<f64>| -> Option<DVector<f64>> {
        let mut aw = a.clone();
        for (i, mut row) in aw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let mut lhs = aw.tr_mul(&a);
        let scale = (0..k).map(|j| lhs[(j, j)]).fold(0.0, f64::max);
        for j in 0..k {
            lhs[(j, j)] += pen_diag[j] + 1e-13 * scale;
        }
        let rhs = aw.tr_mul(&p.y) + &lin;
        match lhs.clone().cholesky() {
            Some(c) => Some(c.solve(&rhs)),
            None => lhs.lu().solve(&rhs),
        }
    };

    let mut beta = solve(&DVector::from_element(n, 1.0)).unwrap_or_else(|| DVector::zeros(k));
    let mut best = beta.clone();
    let mut best_obj = true_obj(&beta);
    let mut iterations = 0;
    let mut converged = false;
    for t in TAU_SCHEDULE {
        let tau = t * unit;
        let mut prev = smoothed_pinball_objective(&a, ys, beta.as_slice(), q, tau, 0.0, &penalized)
            + beta.iter().zip(&pen_diag).map(|(v, d)| d / 2.0 * v * v).sum::<f64>();
        converged = false;
        for _ in 0..MAX_MM_STEPS {
            iterations += 1;
            let u = &p.y - &a * &beta;
            let w = u.map(|v| 1.0 / (2.0 * v.abs().max(tau)));
            let Some(next) = solve(&w) else { break };
            let obj = smoothed_pinball_objective(&a, ys, next.as_slice(), q, tau, 0.0, &penalized)
                + next.iter().zip(&pen_diag).map(|(v, d)| d / 2.0 * v * v).sum::<f64>();
            let step = (&next - &beta).amax();
            beta = next;
            let o = true_obj(&beta);
            if o < best_obj {
                best_obj = o;
                best = beta.clone();
            }
            if (prev - obj).abs() <= 1e-13 * (1.0 + prev.abs()) || step <= 1e-12 * (1.0 + beta.amax()) {
                converged = true;
                break;
            }
            prev = obj;
        }
    }

    // Polish: the pinball optimum interpolates k observations when λ = 0.
    if lambda == 0.0 || pen_diag.iter().all(|d| *d == 0.0) {
        let u = &p.y - &a * &best;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()));
        if n >= k {
            let basis = &order[..k];
            let ab = a.select_rows(basis);
            let yb = DVector::from_iterator(k, basis.iter().map(|&i| p.y[i]));
            if let Some(cand) = ab.lu().solve(&yb) {
                let o = true_obj(&cand);
                if o <= best_obj {
                    best_obj = o;
                    best = cand;
                }
            }
        }
    }
    if !converged {
        log::warn!("quantile regression did not converge");
    }

    let bs: Vec<f64> = best.iter().skip(off).copied().collect();
    let beta = scaling.unscale(p.x.ncols(), &bs);
    let intercept = if p.has_intercept {
        best[0] - beta.iter().zip(&scaling.center).map(|(b, c)| b * c).sum::<f64>()
    } else {
        0.0
    };
    let (fitted, resid) = residuals(&p, intercept, &beta);
    let dropped = scaling.dropped(&p.names);
    Ok(LinearFit {
        method: FitMethod::Quantile { q, lambda },
        names: p.names,
        coefficients: beta,
        has_intercept: p.has_intercept,
        intercept,
        rows: p.rows,
        fitted,
        residuals: resid,
        n,
        p: k,
        loss: best_obj,
        inference: None,
        converged,
        iterations,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intercept_only(n: usize) -> DesignMatrix {
        DesignMatrix::from_rows(&["intercept"], &vec![vec![1.0]; n]).unwrap()
    }

    #[test]
    fn median_of_five() {
        let fit = fit_quantile(&intercept_only(5), &[1.0, 2.0, 3.0, 4.0, 5.0], 0.5, 0.0).unwrap();
        assert!((fit.intercept - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_points_low_quantile() {
        let fit = fit_quantile(&intercept_only(2), &[0.0, 10.0], 0.2, 0.0).unwrap();
        // loss 2 + 0.6c on [0, 10], minimized at c = 0
        assert!(fit.intercept.abs() < 1e-9);
        assert!((fit.loss - 2.0).abs() < 1e-9);
    }

    #[test]
    fn exact_line_any_quantile() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64]).collect();
        let x = DesignMatrix::from_rows(&["intercept", "x"], &rows).unwrap();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        for q in [0.1, 0.5, 0.9] {
            let fit = fit_quantile(&x, &y, q, 0.0).unwrap();
            assert!((fit.coefficients[0] - 2.0).abs() < 1e-8);
            assert!(pinball_loss(&fit.residuals, q) < 1e-8);
        }
    }

    #[test]
    fn rejects_bad_level() {
        assert!(fit_quantile(&intercept_only(2), &[0.0, 1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let x = DMatrix::from_fn(30, 3, |i, j| ((i * (j + 3)) % 7) as f64 - 3.0 + if j == 0 { 4.0 } else { 0.0 });
        let y: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let beta = [0.3, -0.2, 0.5];
        let pen = [false, true, true];
        let g = smoothed_pinball_gradient(&x, &y, &beta, 0.3, 0.5, 0.7, &pen);
        for j in 0..3 {
            let h = 1e-6;
            let mut bp = beta;
            let mut bm = beta;
            bp[j] += h;
            bm[j] -= h;
            let fd = (smoothed_pinball_objective(&x, &y, &bp, 0.3, 0.5, 0.7, &pen)
                - smoothed_pinball_objective(&x, &y, &bm, 0.3, 0.5, 0.7, &pen))
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-4 * g[j].abs().max(1.0), "{j}: {fd} vs {}", g[j]);
        }
    }
}
