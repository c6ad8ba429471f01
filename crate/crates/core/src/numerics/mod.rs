//! Numerical kernel shared by every other module.

mod dogleg;
mod nelder_mead;
mod ode;
mod quadrature;
mod roots;

pub use dogleg::{dogleg_solve, DoglegOptions};
pub use nelder_mead::{nelder_mead_minimize, NelderMeadOptions};
pub use ode::{rk4_simulate, rk4_simulate_with_cap, zoh_discretize, DiscreteSystem, RK4_STIFFNESS_CAP};
pub use quadrature::trapezoid_integral;
pub use roots::{companion_balanced, eigenvalues, polynomial_roots};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// Per-coordinate box `lower[i] <= x[i] <= upper[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxBounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(invalid("bounds have different lengths"));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() || l > u {
                return Err(invalid(format!("bad bound pair at index {i}: [{l}, {u}]")));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Projects `x` onto the box and returns the L1 distance moved.
    pub fn clamp(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let mut dist = 0.0;
        let y = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| {
                let c = v.clamp(*l, *u);
                dist += (v - c).abs();
                c
            })
            .collect();
        (y, dist)
    }
}

/// Outcome of a minimization or root solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solution: Vec<f64>,
    /// Objective value (minimizers) or residual infinity norm (root solvers).
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective or accepted residual norm per iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
}

pub(crate) fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{what} contains non-finite entries")))
    }
}
