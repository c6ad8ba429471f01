use super::{check_finite, SolverReport};
use crate::error::{invalid, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct DoglegOptions {
    /// Convergence threshold on the residual infinity norm.
    pub tol: f64,
    pub max_iters: usize,
    /// Starting trust radius; `None` uses max(1, |x0|).
    pub initial_radius: Option<f64>,
    /// Give up once the radius drops below `radius_floor * (1 + |x|)`.
    pub radius_floor: f64,
}

impl Default for DoglegOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 200,
            initial_radius: None,
            radius_floor: 1e-13,
        }
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Powell trust-region dogleg for square systems `F(x) = 0`.
///
/// The Jacobian is a forward difference with step `1e-6 * max(1, |x_i|)`. The
/// Gauss-Newton direction comes from a truncated SVD pseudo-inverse, so a
/// singular Jacobian degrades to a least-squares step instead of failing.
pub fn dogleg_solve<F>(mut f: F, x0: &[f64], opts: &DoglegOptions) -> Result<SolverReport>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    if n == 0 {
        return Err(invalid("empty unknown vector"));
    }
    check_finite(x0, "x0")?;
    let mut evals = 0usize;
    let mut call = |x: &DVector<f64>| -> Result<DVector<f64>> {
        evals += 1;
        let r = f(x.as_slice());
        if r.len() != n {
            return Err(invalid(format!(
                "residual map returned {} entries for {n} unknowns",
                r.len()
            )));
        }
        Ok(DVector::from_vec(r))
    };

    let mut x = DVector::from_column_slice(x0);
    let mut fx = call(&x)?;
    if fx.iter().any(|v| !v.is_finite()) {
        return Err(invalid("residual is not finite at x0"));
    }
    let mut radius = opts.initial_radius.unwrap_or_else(|| x.norm().max(1.0));
    let mut history = vec![fx.norm()];
    let mut iterations = 0usize;
    let mut jac_stale = true;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    let mut p_gn = DVector::<f64>::zeros(n);
    let mut grad = DVector::<f64>::zeros(n);
    let mut p_cauchy = DVector::<f64>::zeros(n);

    while inf_norm(&fx) > opts.tol && iterations < opts.max_iters {
        iterations += 1;
        if jac_stale {
            for j in 0..n {
                let h = 1e-6 * x[j].abs().max(1.0);
                let mut xp = x.clone();
                xp[j] += h;
                let fp = call(&xp)?;
                for i in 0..n {
                    jac[(i, j)] = (fp[i] - fx[i]) / h;
                }
            }
            if jac.iter().any(|v| !v.is_finite()) {
                break;
            }
            let svd = jac.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let eps = 1e-12 * smax.max(f64::MIN_POSITIVE);
            p_gn = match svd.solve(&(-&fx), eps) {
                Ok(p) => p,
                Err(_) => DVector::zeros(n),
            };
            grad = jac.transpose() * &fx;
            let jg = &jac * &grad;
            let jg2 = jg.norm_squared();
            p_cauchy = if jg2 > 0.0 {
                -(grad.norm_squared() / jg2) * &grad
            } else {
                DVector::zeros(n)
            };
            jac_stale = false;
        }

        let gn_norm = p_gn.norm();
        let step = if gn_norm <= radius {
            p_gn.clone()
        } else if p_cauchy.norm() >= radius || p_cauchy.norm() == 0.0 {
            let gnorm = grad.norm();
            if gnorm == 0.0 {
                break;
            }
            -(radius / gnorm) * &grad
        } else {
            let d = &p_gn - &p_cauchy;
            let a = d.norm_squared();
            let b = 2.0 * p_cauchy.dot(&d);
            let c = p_cauchy.norm_squared() - radius * radius;
            let tau = (-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a);
            &p_cauchy + tau * d
        };
        let step_norm = step.norm();
        if step_norm == 0.0 {
            break;
        }

        let x_new = &x + &step;
        let f_new = call(&x_new)?;
        let f2 = fx.norm_squared();
        let predicted = f2 - (&fx + &jac * &step).norm_squared();
        let rho = if f_new.iter().all(|v| v.is_finite()) && predicted > 0.0 {
            (f2 - f_new.norm_squared()) / predicted
        } else {
            -1.0
        };

        if rho < 0.25 {
            radius = 0.25 * step_norm;
        } else if rho > 0.75 && step_norm >= 0.99 * radius {
            radius *= 2.0;
        }
        if rho > 1e-4 {
            x = x_new;
            fx = f_new;
            history.push(fx.norm());
            jac_stale = true;
        }
        if radius < opts.radius_floor * (1.0 + x.norm()) {
            break;
        }
    }

    let value = inf_norm(&fx);
    Ok(SolverReport {
        solution: x.as_slice().to_vec(),
        value,
        iterations,
        evaluations: evals,
        converged: value <= opts.tol,
        history,
    })
}
