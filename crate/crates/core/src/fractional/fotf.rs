use super::poly::{FracPoly, FracTerm};
use crate::error::{invalid, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// `num(s) / den(s) * exp(-s * delay)` with real-power polynomials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFotf")]
pub struct FracTransferFunction {
    num: FracPoly,
    den: FracPoly,
    delay: f64,
}

#[derive(Deserialize)]
struct RawFotf {
    num: FracPoly,
    den: FracPoly,
    #[serde(default)]
    delay: f64,
}

impl TryFrom<RawFotf> for FracTransferFunction {
    type Error = Error;
    fn try_from(r: RawFotf) -> Result<Self> {
        Self::new(r.num, r.den, r.delay)
    }
}

impl FracTransferFunction {
    pub fn new(num: FracPoly, den: FracPoly, delay: f64) -> Result<Self> {
        if !delay.is_finite() || delay < 0.0 {
            return Err(invalid(format!("delay must be finite and >= 0, got {delay}")));
        }
        Ok(Self { num, den, delay })
    }

    pub fn unity() -> Self {
        Self::gain(1.0).expect("unity gain is valid")
    }

    pub fn gain(k: f64) -> Result<Self> {
        Self::new(FracPoly::constant(k)?, FracPoly::constant(1.0)?, 0.0)
    }

    pub fn delay_only(delay: f64) -> Result<Self> {
        Self::new(FracPoly::constant(1.0)?, FracPoly::constant(1.0)?, delay)
    }

    /// Integer-order rational function from descending coefficient lists.
    pub fn from_coeffs(num: &[f64], den: &[f64], delay: f64) -> Result<Self> {
        Self::new(FracPoly::from_coeffs(num)?, FracPoly::from_coeffs(den)?, delay)
    }

    pub fn num(&self) -> &FracPoly {
        &self.num
    }

    pub fn den(&self) -> &FracPoly {
        &self.den
    }

    pub fn delay(&self) -> f64 {
        self.delay
    }

    pub fn with_delay(&self, delay: f64) -> Result<Self> {
        Self::new(self.num.clone(), self.den.clone(), delay)
    }

    /// Leading denominator exponent minus leading numerator exponent.
    pub fn relative_degree(&self) -> f64 {
        self.den.leading().exponent - self.num.leading().exponent
    }

    pub fn is_integer_order(&self) -> bool {
        self.num.is_integer_order() && self.den.is_integer_order()
    }

    fn check_omega(omega: f64) -> Result<()> {
        if !omega.is_finite() || omega < 0.0 {
            return Err(invalid(format!("omega must be finite and >= 0, got {omega}")));
        }
        Ok(())
    }

    /// `num(j w) / den(j w)` without the delay factor.
    pub fn rational_response(&self, omega: f64) -> Result<Complex64> {
        Self::check_omega(omega)?;
        let d = self.den.eval(omega);
        if d.norm() == 0.0 {
            return Err(Error::Singular(format!("denominator vanishes at omega = {omega}")));
        }
        let g = self.num.eval(omega) / d;
        if !g.re.is_finite() || !g.im.is_finite() {
            return Err(Error::NonFinite { omega });
        }
        Ok(g)
    }

    /// Exact frequency response `G(j omega)` including the delay.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        let g = self.rational_response(omega)?;
        Ok(g * Complex64::from_polar(1.0, -omega * self.delay))
    }

    /// Central-difference slope of the unwrapped phase, in rad per rad/s.
    ///
    /// The rational part is differenced through the phase of
    /// `G(w+) * conj(G(w-))`, which never crosses a branch cut for small `h`;
    /// the delay contributes exactly `-L`.
    pub fn phase_slope(&self, omega: f64, h: f64) -> Result<f64> {
        if !(omega > 0.0) {
            return Err(invalid("phase slope needs omega > 0"));
        }
        if !(h > 0.0 && h < 0.5) {
            return Err(invalid(format!("relative step must be in (0, 0.5), got {h}")));
        }
        let hi = self.rational_response(omega * (1.0 + h))?;
        let lo = self.rational_response(omega * (1.0 - h))?;
        let dphi = (hi * lo.conj()).arg();
        Ok(dphi / (2.0 * h * omega) - self.delay)
    }

    /// Phase of the rational part as `w -> 0+`, from the lowest-order terms.
    pub fn low_frequency_phase(&self) -> f64 {
        let n = self.num.lowest();
        let d = self.den.lowest();
        let mut phi = (n.exponent - d.exponent) * FRAC_PI_2;
        if n.coeff < 0.0 {
            phi += PI;
        }
        if d.coeff < 0.0 {
            phi -= PI;
        }
        phi
    }

    /// Continuous phase at `omega`, anchored at `anchor` to the branch nearest
    /// the low-frequency asymptote and tracked along a log grid.
    pub fn unwrapped_phase(&self, omega: f64, anchor: f64) -> Result<f64> {
        if !(omega > 0.0 && anchor > 0.0) {
            return Err(invalid("unwrapped phase needs positive frequencies"));
        }
        let g_a = self.rational_response(anchor)?;
        let target = self.low_frequency_phase();
        let p = g_a.arg();
        let mut phase = p + TAU * ((target - p) / TAU).round();

        let ratio = (omega / anchor).ln();
        let steps = ((ratio.abs() / 0.02).ceil() as usize).max(1);
        let mut prev = g_a;
        for k in 1..=steps {
            let w = anchor * (ratio * k as f64 / steps as f64).exp();
            let g = self.rational_response(w)?;
            phase += (g * prev.conj()).arg();
            prev = g;
        }
        Ok(phase - omega * self.delay)
    }

    /// Product `a * b` (numerators and denominators multiplied, delays added).
    pub fn series(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.num.mul(&other.num)?,
            self.den.mul(&other.den)?,
            self.delay + other.delay,
        )
    }

    pub fn scale(&self, k: f64) -> Result<Self> {
        Self::new(self.num.scale(k)?, self.den.clone(), self.delay)
    }

    pub fn dc_gain(&self) -> Result<f64> {
        let g = self.rational_response(0.0)?;
        Ok(g.re)
    }
}

pub fn term(coeff: f64, exponent: f64) -> FracTerm {
    FracTerm::new(coeff, exponent)
}
