use super::{check_finite, BoxBounds, SolverReport};
use crate::error::{invalid, Result};

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Absolute spread tolerance on both the simplex objective values and vertices.
    pub tol: f64,
    pub max_evals: usize,
    /// Initial simplex edge per coordinate. `None` uses 5% of |x0| (0.00025 for zeros).
    pub initial_step: Option<Vec<f64>>,
    /// Penalty per unit of L1 distance a candidate lies outside the bounds.
    pub bound_penalty: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_evals: 20_000,
            initial_step: None,
            bound_penalty: 1e3,
        }
    }
}

/// Bounded Nelder-Mead minimization.
///
/// Candidates outside `bounds` are evaluated at their projection onto the box
/// plus `bound_penalty` times the projection distance. The reported solution is
/// always projected, so it lies inside the box.
pub fn nelder_mead_minimize<F>(
    mut f: F,
    x0: &[f64],
    bounds: Option<&BoxBounds>,
    opts: &NelderMeadOptions,
) -> Result<SolverReport>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        return Err(invalid("empty decision vector"));
    }
    check_finite(x0, "x0")?;
    if let Some(b) = bounds {
        if b.len() != n {
            return Err(invalid("bounds length differs from x0"));
        }
        if !b.contains(x0) {
            return Err(invalid("x0 lies outside the bounds"));
        }
    }

    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| -> f64 {
        evals.set(evals.get() + 1);
        let v = match bounds {
            Some(b) => {
                let (xc, dist) = b.clamp(x);
                f(&xc) + opts.bound_penalty * dist
            }
            None => f(x),
        };
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let f0 = eval(x0);
    if !f0.is_finite() {
        return Err(invalid("objective is not finite at x0"));
    }

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    values.push(f0);
    for i in 0..n {
        let mut v = x0.to_vec();
        let step = match &opts.initial_step {
            Some(s) => s[i],
            None if x0[i] != 0.0 => 0.05 * x0[i],
            None => 0.00025,
        };
        v[i] += step;
        values.push(eval(&v));
        simplex.push(v);
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();

    loop {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];
        history.push(values[best]);

        let f_spread = order
            .iter()
            .map(|&i| (values[i] - values[best]).abs())
            .fold(0.0, f64::max);
        let x_spread = order
            .iter()
            .flat_map(|&i| {
                simplex[i]
                    .iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max);
        if f_spread <= opts.tol && x_spread <= opts.tol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for &i in &order[..n] {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < values[best] {
            let xe = along(alpha * gamma);
            let fe = eval(&xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second_worst] {
            simplex[worst] = xr;
            values[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[worst] {
            let xc = along(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[worst].min(fr) {
            simplex[worst] = xc;
            values[worst] = fc;
            continue;
        }
        let xb = simplex[best].clone();
        for &i in &order[1..] {
            let shrunk: Vec<f64> = xb
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    let solution = match bounds {
        Some(b) => b.clamp(&simplex[best]).0,
        None => simplex[best].clone(),
    };
    Ok(SolverReport {
        solution,
        value: values[best],
        iterations,
        evaluations: evals.get(),
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn rosenbrock_minimum() {
        let r = nelder_mead_minimize(rosenbrock, &[-1.2, 1.0], None, &Default::default()).unwrap();
        assert!(r.converged);
        assert!((r.solution[0] - 1.0).abs() < 1e-4);
        assert!((r.solution[1] - 1.0).abs() < 1e-4);
        assert!(r.value < 1e-8);
    }

    #[test]
    fn quadratic_minimum() {
        let r = nelder_mead_minimize(
            |x: &[f64]| (x[0] - 3.0).powi(2),
            &[0.0],
            None,
            &Default::default(),
        )
        .unwrap();
        assert!((r.solution[0] - 3.0).abs() < 1e-4);
    }

    #[test]
    fn bounded_minimum_on_face() {
        let b = BoxBounds::new(vec![-1.0, -1.0], vec![2.0, 0.5]).unwrap();
        let r = nelder_mead_minimize(rosenbrock, &[0.0, 0.0], Some(&b), &Default::default()).unwrap();
        assert!(b.contains(&r.solution));
        // Constrained optimum lies on x1 = 0.5, near x0 = sqrt(0.5).
        assert!((r.solution[1] - 0.5).abs() < 1e-3);
        assert!((r.solution[0] - 0.5f64.sqrt()).abs() < 2e-2);
    }

    #[test]
    fn non_finite_start_rejected() {
        let r = nelder_mead_minimize(|_: &[f64]| f64::NAN, &[0.0], None, &Default::default());
        assert!(r.is_err());
    }

    #[test]
    fn eval_budget_reported() {
        let opts = NelderMeadOptions {
            max_evals: 20,
            ..Default::default()
        };
        let r = nelder_mead_minimize(rosenbrock, &[-1.2, 1.0], None, &opts).unwrap();
        assert!(!r.converged);
        assert!(r.evaluations <= 24);
    }

    proptest! {
        #[test]
        fn best_value_non_increasing(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.1f64..10.0) {
            let f = |x: &[f64]| c * (x[0] - a).powi(2) + (x[1] - b).powi(4) + (x[0] * x[1]).sin();
            let r = nelder_mead_minimize(f, &[0.3, -0.2], None, &Default::default()).unwrap();
            for w in r.history.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }

        #[test]
        fn bounded_solution_inside(lo in -2.0f64..0.0, width in 0.1f64..3.0) {
            let b = BoxBounds::new(vec![lo, lo], vec![lo + width, lo + width]).unwrap();
            let x0 = [lo + 0.5 * width, lo + 0.5 * width];
            let r = nelder_mead_minimize(rosenbrock, &x0, Some(&b), &Default::default()).unwrap();
            prop_assert!(b.contains(&r.solution));
        }
    }
}
