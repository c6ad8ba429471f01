use crate::error::{invalid, Result};
use crate::fractional::FracTransferFunction;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Magnitude and unwrapped phase on a log grid. Frequencies where the
/// response could not be evaluated are left out and listed in `gaps`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrequencyCurve {
    pub omega: Vec<f64>,
    pub magnitude_db: Vec<f64>,
    pub phase_deg: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl FrequencyCurve {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(invalid(format!("frequency band must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(invalid("a frequency grid needs at least two points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Phase change of the rational part of `g` from `a` to `b`, tracked on a
/// log grid; evaluation failures along the way are stepped over.
fn tracked_increment(g: &FracTransferFunction, a: f64, b: f64) -> Option<f64> {
    let ratio = (b / a).ln();
    let steps = ((ratio.abs() / 0.02).ceil() as usize).max(1);
    let mut prev = g.rational_response(a).ok()?;
    let mut total = 0.0;
    for k in 1..=steps {
        let w = a * (ratio * k as f64 / steps as f64).exp();
        if let Ok(z) = g.rational_response(w) {
            if z.is_finite() && z.norm() > 0.0 {
                total += (z * prev.conj()).arg();
                prev = z;
            }
        }
    }
    Some(total)
}

/// Exact response of `g`, phase unwrapped from the low end of the band.
pub fn bode_curve(g: &FracTransferFunction, omega_lo: f64, omega_hi: f64, points: usize) -> Result<FrequencyCurve> {
    let grid = log_grid(omega_lo, omega_hi, points)?;
    let mut out = FrequencyCurve::default();
    // (frequency, phase without delay) of the last plotted point.
    let mut prev: Option<(f64, f64)> = None;
    for w in grid {
        let z = match g.freq_response(w) {
            Ok(z) if z.norm() > 0.0 && z.is_finite() => z,
            _ => {
                out.gaps.push(w);
                continue;
            }
        };
        let ph = match prev {
            None => g.unwrapped_phase(w, w).ok().map(|p| p + w * g.delay()),
            Some((wp, pp)) => tracked_increment(g, wp, w).map(|d| pp + d),
        };
        let Some(ph) = ph.filter(|p| p.is_finite()) else {
            out.gaps.push(w);
            continue;
        };
        prev = Some((w, ph));
        out.omega.push(w);
        out.magnitude_db.push(20.0 * z.norm().log10());
        out.phase_deg.push((ph - w * g.delay()).to_degrees());
    }
    Ok(out)
}

fn curve_from_samples(samples: &[(f64, Option<Complex64>)]) -> FrequencyCurve {
    let mut out = FrequencyCurve::default();
    let mut prev: Option<(Complex64, f64)> = None;
    for &(w, z) in samples {
        match z {
            Some(z) if z.norm() > 0.0 && z.is_finite() => {
                let ph = match prev {
                    Some((pz, pph)) => pph + (z * pz.conj()).arg(),
                    None => z.arg(),
                };
                out.omega.push(w);
                out.magnitude_db.push(20.0 * z.norm().log10());
                out.phase_deg.push(ph.to_degrees());
                prev = Some((z, ph));
            }
            _ => out.gaps.push(w),
        }
    }
    out
}

/// `(S, T)` curves of the unity-feedback loop with open-loop response `g`.
/// Points where `|1 + G| < 1e-12` are reported as gaps.
pub fn sensitivity_curves(
    g: &FracTransferFunction,
    omega_lo: f64,
    omega_hi: f64,
    points: usize,
) -> Result<(FrequencyCurve, FrequencyCurve)> {
    let grid = log_grid(omega_lo, omega_hi, points)?;
    let mut s = Vec::with_capacity(grid.len());
    let mut t = Vec::with_capacity(grid.len());
    for w in grid {
        match g.freq_response(w) {
            Ok(z) if (1.0 + z).norm() >= 1e-12 && z.is_finite() => {
                s.push((w, Some(1.0 / (1.0 + z))));
                t.push((w, Some(z / (1.0 + z))));
            }
            _ => {
                s.push((w, None));
                t.push((w, None));
            }
        }
    }
    Ok((curve_from_samples(&s), curve_from_samples(&t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::{term, FracPoly};
    use proptest::prelude::*;

    #[test]
    fn integrator_and_delay() {
        let g = FracTransferFunction::from_coeffs(&[1.0], &[1.0, 0.0], 0.0).unwrap();
        let c = bode_curve(&g, 0.1, 10.0, 3).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.magnitude_db[1].abs() < 1e-12 && (c.phase_deg[1] + 90.0).abs() < 1e-9);
        let d = FracTransferFunction::delay_only(1.0).unwrap();
        let c = bode_curve(&d, 0.1, 10.0, 3).unwrap();
        assert!(c.magnitude_db[1].abs() < 1e-12 && (c.phase_deg[1] + 57.2958).abs() < 1e-4);
        assert!((c.phase_deg[2] + 572.958).abs() < 1e-3);
    }

    #[test]
    fn low_frequency_phase_counts_integrators() {
        let g = FracTransferFunction::from_coeffs(&[2.0, 1.0], &[1.0, 3.0, 0.0, 0.0], 0.0).unwrap();
        let c = bode_curve(&g, 1e-5, 1.0, 50).unwrap();
        assert!((c.phase_deg[0] + 180.0).abs() < 0.01);
    }

    #[test]
    fn singular_points_become_gaps() {
        // 1/(s^2 + 1) at omega = 1.
        let g = FracTransferFunction::from_coeffs(&[1.0], &[1.0, 0.0, 1.0], 0.0).unwrap();
        let c = bode_curve(&g, 1.0, 4.0, 2).unwrap();
        assert_eq!(c.gaps, vec![1.0]);
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn high_gain_limits() {
        let g = FracTransferFunction::new(
            FracPoly::constant(1e4).unwrap(),
            FracPoly::new(vec![term(1.0, 1.0), term(1e-6, 0.0)]).unwrap(),
            0.0,
        )
        .unwrap();
        let (s, t) = sensitivity_curves(&g, 1e-4, 1e-3, 5).unwrap();
        assert!(s.magnitude_db.iter().all(|v| *v < -40.0));
        assert!(t.magnitude_db.iter().all(|v| v.abs() < 1e-3));
    }

    proptest! {
        #[test]
        fn s_plus_t_is_one(k in 0.1f64..20.0, l in 0.0f64..2.0, w in 1e-3f64..1e3) {
            let g = FracTransferFunction::new(
                FracPoly::constant(k).unwrap(),
                FracPoly::new(vec![term(1.0, 2.2), term(1.3, 1.0), term(0.5, 0.0)]).unwrap(),
                l,
            ).unwrap();
            let z = g.freq_response(w).unwrap();
            let (s, t) = (1.0 / (1.0 + z), z / (1.0 + z));
            prop_assert!((s + t - 1.0).norm() < 1e-12);
        }
    }
}
