use crate::time::SimResult;
use serde::{Deserialize, Serialize};

/// Band used for the settling time, relative to the final value.
pub const SETTLING_BAND: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Percent overshoot over the final value, never negative.
    pub mp_pct: f64,
    /// 10% to 90% rise time.
    pub t_r: Option<f64>,
    /// Time of the last entry into the 2% band.
    pub t_s: Option<f64>,
    /// Final value (last sample).
    pub y_ss: f64,
    /// Whether the final 10% of samples lie inside the 2% band.
    pub settled: bool,
    /// False when the final value is too small to normalize by.
    pub defined: bool,
}

fn first_crossing(t: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let i = y.iter().position(|v| *v >= level)?;
    if i == 0 {
        return Some(t[0]);
    }
    let (y0, y1) = (y[i - 1], y[i]);
    Some(t[i - 1] + (level - y0) / (y1 - y0) * (t[i] - t[i - 1]))
}

/// Overshoot, rise time and settling time of a step response. The response
/// is normalized by its final value, so the metrics are invariant under
/// positive output scaling.
pub fn step_metrics(r: &SimResult) -> StepMetrics {
    let undefined = |y_ss: f64| StepMetrics {
        mp_pct: 0.0,
        t_r: None,
        t_s: None,
        y_ss,
        settled: false,
        defined: false,
    };
    let Some(&y_ss) = r.y.last() else {
        return undefined(f64::NAN);
    };
    let peak = r.y.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.abs()));
    if r.overflow || !y_ss.is_finite() || y_ss.abs() <= 1e-9 * peak.max(1e-300) {
        return undefined(y_ss);
    }
    let yn: Vec<f64> = r.y.iter().map(|v| v / y_ss).collect();
    let max = yn.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let mp_pct = (100.0 * (max - 1.0)).max(0.0);
    let t_r = match (first_crossing(&r.t, &yn, 0.1), first_crossing(&r.t, &yn, 0.9)) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };
    let outside = |v: f64| (v - 1.0).abs() > SETTLING_BAND;
    let t_s = match yn.iter().rposition(|v| outside(*v)) {
        None => Some(r.t[0]),
        Some(i) if i + 1 == yn.len() => None,
        Some(i) => {
            let (a, b) = (yn[i], yn[i + 1]);
            let edge = if a > 1.0 { 1.0 + SETTLING_BAND } else { 1.0 - SETTLING_BAND };
            Some(r.t[i] + (edge - a) / (b - a) * (r.t[i + 1] - r.t[i]))
        }
    };
    let tail = yn.len() - yn.len() / 10;
    let settled = yn[tail.min(yn.len() - 1)..].iter().all(|v| !outside(*v));
    StepMetrics {
        mp_pct,
        t_r,
        t_s,
        y_ss,
        settled,
        defined: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sampled(f: impl Fn(f64) -> f64, dt: f64, t_end: f64) -> SimResult {
        let n = (t_end / dt).round() as usize + 1;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let y: Vec<f64> = t.iter().map(|&x| f(x)).collect();
        SimResult { e: y.iter().map(|v| 1.0 - v).collect(), u: vec![0.0; n], y, t, overflow: false }
    }

    #[test]
    fn second_order_overshoot() {
        let z: f64 = 0.5;
        let wd = (1.0 - z * z).sqrt();
        let r = sampled(|t| 1.0 - (-z * t).exp() * ((wd * t).cos() + z / wd * (wd * t).sin()), 0.001, 40.0);
        let m = step_metrics(&r);
        let exact = 100.0 * (-z * std::f64::consts::PI / wd).exp();
        assert!((m.mp_pct - exact).abs() < 0.1 && (m.mp_pct - 16.30).abs() < 0.1, "{}", m.mp_pct);
        assert!(m.settled && m.t_r.unwrap() <= m.t_s.unwrap());
    }

    #[test]
    fn first_order_rise_time() {
        let r = sampled(|t| 1.0 - (-t).exp(), 0.001, 30.0);
        let m = step_metrics(&r);
        assert_eq!(m.mp_pct, 0.0);
        assert!((m.t_r.unwrap() - 9f64.ln()).abs() < 0.01);
        assert!((m.t_s.unwrap() - 50f64.ln()).abs() < 0.01);
    }

    #[test]
    fn ramp_has_no_overshoot_and_zero_is_undefined() {
        let r = sampled(|t| t.min(1.0), 0.01, 5.0);
        assert_eq!(step_metrics(&r).mp_pct, 0.0);
        let r = sampled(|_| 0.0, 0.01, 5.0);
        assert!(!step_metrics(&r).defined);
    }

    proptest! {
        #[test]
        fn invariant_under_output_scaling(c in 0.01f64..100.0, z in 0.1f64..0.9) {
            let wd = (1.0 - z * z).sqrt();
            let f = move |t: f64| 1.0 - (-z * t).exp() * ((wd * t).cos() + z / wd * (wd * t).sin());
            let a = step_metrics(&sampled(f, 0.01, 40.0));
            let b = step_metrics(&sampled(move |t| c * f(t), 0.01, 40.0));
            prop_assert!((a.mp_pct - b.mp_pct).abs() < 1e-9);
            prop_assert!((a.t_r.unwrap() - b.t_r.unwrap()).abs() < 1e-9);
            prop_assert!((a.t_s.unwrap() - b.t_s.unwrap()).abs() < 1e-9);
        }
    }
}
