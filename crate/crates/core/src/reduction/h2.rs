use super::model::ReducedModel;
use crate::error::{Error, Result};
use crate::fractional::{FracTransferFunction, OustaloupConfig};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const H2_GRID_POINTS: usize = 2000;

/// Log-spaced integration grid over the Oustaloup band.
pub fn h2_grid(cfg: &OustaloupConfig) -> Vec<f64> {
    let (lo, hi) = (cfg.omega_low.log10(), cfg.omega_high.log10());
    let n = H2_GRID_POINTS;
    (0..n)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (n - 1) as f64))
        .collect()
}

/// H2 distance and an estimate of the mass outside the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Value {
    pub j: f64,
    /// Estimated increase of `j` if the integral ran over `(0, inf)`.
    pub truncation: f64,
}

/// Composite trapezoid over a non-uniform grid.
pub(crate) fn trapezoid_nonuniform(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

pub(crate) fn sample(g: &FracTransferFunction, grid: &[f64]) -> Result<Vec<Complex64>> {
    grid.iter()
        .map(|&w| {
            let z = g.freq_response(w).map_err(|_| Error::NonFinite { omega: w })?;
            if z.re.is_finite() && z.im.is_finite() {
                Ok(z)
            } else {
                Err(Error::NonFinite { omega: w })
            }
        })
        .collect()
}

/// Tail estimate from the first/last grid samples of the squared envelope.
pub(crate) fn tail_estimate(grid: &[f64], env2: &[f64]) -> f64 {
    let n = grid.len();
    let low = env2[0] * grid[0];
    let q = -(env2[n - 1] / env2[n - 2]).ln() / (grid[n - 1] / grid[n - 2]).ln();
    let high = if env2[n - 1] == 0.0 {
        0.0
    } else if q > 1.0 {
        env2[n - 1] * grid[n - 1] / (q - 1.0)
    } else {
        f64::INFINITY
    };
    low + high
}

/// `sqrt((1/pi) * integral |A(jw) - B(jw)|^2 dw)` over `grid`; `b = None` is the zero system.
pub fn h2_distance(a: &FracTransferFunction, b: Option<&FracTransferFunction>, grid: &[f64]) -> Result<H2Value> {
    let sa = sample(a, grid)?;
    let sb = match b {
        Some(b) => sample(b, grid)?,
        None => vec![Complex64::new(0.0, 0.0); grid.len()],
    };
    let diff2: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| (x - y).norm_sqr()).collect();
    let env2: Vec<f64> = sa.iter().zip(&sb).map(|(x, y)| (x.norm() + y.norm()).powi(2)).collect();
    let integral = trapezoid_nonuniform(grid, &diff2);
    let j = (integral / PI).sqrt();
    let total = ((integral + tail_estimate(grid, &env2)) / PI).sqrt();
    Ok(H2Value { j, truncation: total - j })
}

/// Model mismatch `J_f = ||P - P~||_2` on the default grid of the band.
pub fn h2_mismatch(p: &FracTransferFunction, m: &ReducedModel, cfg: &OustaloupConfig) -> Result<f64> {
    Ok(h2_distance(p, Some(&m.to_fotf()?), &h2_grid(cfg))?.j)
}

pub fn h2_norm(g: &FracTransferFunction, cfg: &OustaloupConfig) -> Result<f64> {
    Ok(h2_distance(g, None, &h2_grid(cfg))?.j)
}
