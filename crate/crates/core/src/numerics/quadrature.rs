use crate::error::{invalid, Result};

/// Composite trapezoid rule over uniformly spaced samples.
pub fn trapezoid_integral(samples: &[f64], dt: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(invalid("trapezoid rule needs at least 2 samples"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let n = samples.len();
    let inner: f64 = samples[1..n - 1].iter().sum();
    Ok(dt * (0.5 * (samples[0] + samples[n - 1]) + inner))
}
