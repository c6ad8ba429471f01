use crate::error::{invalid, Result};
use crate::fractional::{jw_pow, term, FracPoly, FracTransferFunction};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Parallel-form fractional PID `Kp + Ki s^-lambda + Kd s^mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FopidParams {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl FopidParams {
    pub fn new(kp: f64, ki: f64, kd: f64, lambda: f64, mu: f64) -> Result<Self> {
        let c = Self { kp, ki, kd, lambda, mu };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.to_vec();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(invalid("controller parameters must be finite"));
        }
        if self.kp < 0.0 || self.ki < 0.0 || self.kd < 0.0 {
            return Err(invalid("controller gains must be non-negative"));
        }
        if self.kp == 0.0 && self.ki == 0.0 && self.kd == 0.0 {
            return Err(invalid("at least one controller gain must be positive"));
        }
        if !(0.0..=2.0).contains(&self.lambda) || !(0.0..=2.0).contains(&self.mu) {
            return Err(invalid(format!(
                "controller orders must lie in [0, 2], got lambda = {}, mu = {}",
                self.lambda, self.mu
            )));
        }
        Ok(())
    }

    /// `[Kp, Ki, Kd, lambda, mu]`.
    pub fn to_vec(&self) -> [f64; 5] {
        [self.kp, self.ki, self.kd, self.lambda, self.mu]
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        if x.len() != 5 {
            return Err(invalid(format!("expected 5 controller parameters, got {}", x.len())));
        }
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }

    /// `C(j omega)`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.kp + self.ki * jw_pow(omega, -self.lambda) + self.kd * jw_pow(omega, self.mu)
    }

    /// `dC(j omega)/d omega`.
    pub fn eval_domega(&self, omega: f64) -> Complex64 {
        -self.lambda * self.ki * jw_pow(omega, -self.lambda) / omega + self.mu * self.kd * jw_pow(omega, self.mu) / omega
    }
}

/// `(Kp s^lambda + Ki + Kd s^(lambda+mu)) / s^lambda`.
pub fn fopid_to_fotf(c: &FopidParams) -> Result<FracTransferFunction> {
    c.validate()?;
    let num = FracPoly::new(vec![
        term(c.kp, c.lambda),
        term(c.ki, 0.0),
        term(c.kd, c.lambda + c.mu),
    ])?;
    let den = FracPoly::new(vec![term(1.0, c.lambda)])?;
    FracTransferFunction::new(num, den, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerResponse {
    pub magnitude: f64,
    /// Principal-branch phase in radians.
    pub phase: f64,
    /// `d(phase)/d omega` in rad per rad/s.
    pub phase_slope: f64,
}

pub fn controller_response_analytic(c: &FopidParams, omega: f64) -> Result<ControllerResponse> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(invalid(format!("controller response needs omega > 0, got {omega}")));
    }
    c.validate()?;
    let z = c.eval(omega);
    if z.norm() == 0.0 {
        return Err(invalid(format!("controller response vanishes at omega = {omega}")));
    }
    Ok(ControllerResponse {
        magnitude: z.norm(),
        phase: z.arg(),
        phase_slope: (c.eval_domega(omega) / z).im,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn proportional_only() {
        let c = FopidParams::new(2.5, 0.0, 0.0, 0.7, 1.3).unwrap();
        let r = controller_response_analytic(&c, 3.0).unwrap();
        assert!((r.magnitude - 2.5).abs() < 1e-14 && r.phase.abs() < 1e-14 && r.phase_slope.abs() < 1e-14);
        let g = fopid_to_fotf(&c).unwrap();
        for w in [1e-3, 0.4, 70.0] {
            assert!((g.freq_response(w).unwrap() - 2.5).norm() < 1e-12);
        }
    }

    #[test]
    fn pure_integrator() {
        let c = FopidParams::new(0.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        let g = fopid_to_fotf(&c).unwrap();
        assert_eq!(g.num().terms().len(), 1);
        assert_eq!(g.den().leading().exponent, 1.0);
        let z = g.freq_response(2.0).unwrap();
        assert!((z - Complex64::new(0.0, -0.5)).norm() < 1e-14);
    }

    #[test]
    fn fractional_integrator_has_constant_phase() {
        let c = FopidParams::new(0.0, 0.8, 0.0, 0.6, 1.0).unwrap();
        for w in [0.01, 1.0, 50.0] {
            let r = controller_response_analytic(&c, w).unwrap();
            assert!((r.phase + 0.6 * FRAC_PI_2).abs() < 1e-12);
            assert!(r.phase_slope.abs() < 1e-12);
        }
    }

    #[test]
    fn unit_pid_at_unit_frequency() {
        let c = FopidParams::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let r = controller_response_analytic(&c, 1.0).unwrap();
        assert!((r.magnitude - 1.0).abs() < 1e-14 && r.phase.abs() < 1e-14);
        assert!(controller_response_analytic(&c, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_orders_and_gains() {
        assert!(FopidParams::new(1.0, 1.0, 1.0, 2.5, 1.0).is_err());
        assert!(FopidParams::new(-1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(FopidParams::new(0.0, 0.0, 0.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn analytic_matches_fotf_and_difference(
            kp in 0.01f64..10.0, ki in 0.01f64..10.0, kd in 0.01f64..10.0,
            lambda in 0.05f64..1.95, mu in 0.05f64..1.95, w in 0.01f64..100.0,
        ) {
            let c = FopidParams::new(kp, ki, kd, lambda, mu).unwrap();
            let r = controller_response_analytic(&c, w).unwrap();
            let g = fopid_to_fotf(&c).unwrap().freq_response(w).unwrap();
            prop_assert!((g.norm() - r.magnitude).abs() <= 1e-10 * r.magnitude);
            prop_assert!((g.arg() - r.phase).abs() <= 1e-10);
            let h = 1e-5;
            let fd = (c.eval(w * (1.0 + h)) * c.eval(w * (1.0 - h)).conj()).arg() / (2.0 * h * w);
            prop_assert!((fd - r.phase_slope).abs() <= 1e-5 * (1.0 + r.phase_slope.abs()));
        }
    }
}
