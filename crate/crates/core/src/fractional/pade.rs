use super::rational::RationalTf;
use crate::error::{invalid, Result};

/// Diagonal `[n/n]` Pade approximation of `exp(-s L)`.
pub fn pade_delay(delay: f64, order: usize) -> Result<RationalTf> {
    if !delay.is_finite() || delay < 0.0 {
        return Err(invalid(format!("delay must be finite and >= 0, got {delay}")));
    }
    if order == 0 {
        return Err(invalid("Pade order must be >= 1"));
    }
    if delay == 0.0 {
        return Ok(RationalTf::unity());
    }
    let n = order;
    // c_k = (2n - k)! n! / ((2n)! k! (n - k)!), built by the ratio c_{k+1}/c_k.
    let mut c = vec![1.0f64; n + 1];
    for k in 0..n {
        c[k + 1] = c[k] * (n - k) as f64 / (((2 * n - k) * (k + 1)) as f64);
    }
    let mut num = vec![0.0; n + 1];
    let mut den = vec![0.0; n + 1];
    for k in 0..=n {
        let lk = delay.powi(k as i32) * c[k];
        num[n - k] = if k % 2 == 0 { lk } else { -lk };
        den[n - k] = lk;
    }
    RationalTf::new(num, den)
}
