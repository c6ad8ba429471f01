use super::rational::RationalTf;
use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Band and order of the Oustaloup filter. `order` counts zero-pole pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OustaloupConfig {
    pub omega_low: f64,
    pub omega_high: f64,
    pub order: usize,
}

impl Default for OustaloupConfig {
    fn default() -> Self {
        Self {
            omega_low: 1e-4,
            omega_high: 1e4,
            order: 11,
        }
    }
}

impl OustaloupConfig {
    pub fn with_order(order: usize) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_low > 0.0 && self.omega_low < self.omega_high && self.omega_high.is_finite()) {
            return Err(invalid(format!(
                "Oustaloup band must satisfy 0 < low < high, got [{}, {}]",
                self.omega_low, self.omega_high
            )));
        }
        if self.order == 0 || self.order % 2 == 0 {
            return Err(invalid(format!(
                "Oustaloup order (zero-pole pairs) must be odd and >= 1, got {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// `gain * prod (s + zeros[i]) / prod (s + poles[i])`, all corners positive.
#[derive(Debug, Clone, PartialEq)]
pub struct OustaloupFilter {
    pub zeros: Vec<f64>,
    pub poles: Vec<f64>,
    pub gain: f64,
}

impl OustaloupFilter {
    /// Recursive approximation of `s^f`, `f` in (-1, 1).
    ///
    /// Corners follow the symmetric geometric placement with `2N + 1 = order`
    /// pairs; the gain makes the magnitude exact at the band's geometric centre.
    /// Filters for `f` and `-f` are exact reciprocals.
    pub fn new(f: f64, cfg: &OustaloupConfig) -> Result<Self> {
        cfg.validate()?;
        if !(f > -1.0 && f < 1.0) {
            return Err(invalid(format!("Oustaloup exponent must lie in (-1, 1), got {f}")));
        }
        let n = (cfg.order as f64 - 1.0) / 2.0;
        let pairs = cfg.order as f64;
        let span = cfg.omega_high / cfg.omega_low;
        let mut zeros = Vec::with_capacity(cfg.order);
        let mut poles = Vec::with_capacity(cfg.order);
        for i in 0..cfg.order {
            let k = i as f64 - n;
            zeros.push(cfg.omega_low * span.powf((k + n + 0.5 * (1.0 - f)) / pairs));
            poles.push(cfg.omega_low * span.powf((k + n + 0.5 * (1.0 + f)) / pairs));
        }
        let centre = (cfg.omega_low * cfg.omega_high).sqrt();
        let mut filter = Self {
            zeros,
            poles,
            gain: 1.0,
        };
        filter.gain = centre.powf(f) / filter.eval(centre).norm();
        Ok(filter)
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        let mut h = Complex64::new(self.gain, 0.0);
        for (z, p) in self.zeros.iter().zip(&self.poles) {
            h *= (s + z) / (s + p);
        }
        h
    }

    pub fn to_rational(&self) -> RationalTf {
        let mut num = vec![self.gain];
        let mut den = vec![1.0];
        for (z, p) in self.zeros.iter().zip(&self.poles) {
            num = super::rational::poly_mul(&num, &[1.0, *z]);
            den = super::rational::poly_mul(&den, &[1.0, *p]);
        }
        RationalTf::new(num, den).expect("Oustaloup polynomials are finite")
    }
}

/// Splits `alpha` into `floor(alpha)` and a fractional part in `[0, 1)`.
pub fn split_order(alpha: f64) -> (i32, f64) {
    let k = alpha.floor();
    (k as i32, alpha - k)
}

/// Rational approximation of `s^alpha` for alpha in (-2, 2).
///
/// Integer orders are exact; otherwise `s^floor(alpha) * Oust(frac(alpha))`.
pub fn oustaloup(alpha: f64, cfg: &OustaloupConfig) -> Result<RationalTf> {
    if !(alpha > -2.0 && alpha < 2.0) {
        return Err(invalid(format!("order must lie in (-2, 2), got {alpha}")));
    }
    cfg.validate()?;
    power_rational(alpha, cfg)
}

/// `s^alpha` approximation for any finite alpha (same decomposition).
pub(crate) fn power_rational(alpha: f64, cfg: &OustaloupConfig) -> Result<RationalTf> {
    if !alpha.is_finite() {
        return Err(invalid("order must be finite"));
    }
    let (k, f) = split_order(alpha);
    let base = if f > 0.0 {
        OustaloupFilter::new(f, cfg)?.to_rational()
    } else {
        RationalTf::unity()
    };
    Ok(base.mul(&RationalTf::monomial(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fractional::poly::jw_pow;

    #[test]
    fn half_order_at_centre() {
        let h = oustaloup(0.5, &OustaloupConfig::default()).unwrap();
        let z = h.eval(1.0);
        assert!((z.norm() - 1.0).abs() < 0.02);
        assert!((z.arg().to_degrees() - 45.0).abs() < 1.0);
    }

    #[test]
    fn centre_magnitude_exact() {
        for f in [0.1, 0.5, 0.84, -0.3] {
            let h = OustaloupFilter::new(f, &OustaloupConfig::default()).unwrap();
            assert!((h.eval(1.0).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reciprocal_symmetry() {
        let cfg = OustaloupConfig::default();
        let a = OustaloupFilter::new(0.37, &cfg).unwrap();
        let b = OustaloupFilter::new(-0.37, &cfg).unwrap();
        for w in [1e-3, 0.2, 7.0, 3e3] {
            assert!((a.eval(w) * b.eval(w) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn integer_bypass() {
        let cfg = OustaloupConfig::default();
        assert_eq!(oustaloup(0.0, &cfg).unwrap(), RationalTf::unity());
        let d = oustaloup(1.0, &cfg).unwrap();
        assert_eq!(d.num(), &[1.0, 0.0]);
        assert_eq!(d.den(), &[1.0]);
        let i = oustaloup(-1.0, &cfg).unwrap();
        assert_eq!(i.num(), &[1.0]);
        assert_eq!(i.den(), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = OustaloupConfig::default();
        assert!(oustaloup(2.0, &cfg).is_err());
        assert!(oustaloup(-2.5, &cfg).is_err());
        let even = OustaloupConfig::with_order(4);
        assert!(oustaloup(0.5, &even).is_err());
        let band = OustaloupConfig {
            omega_low: 10.0,
            omega_high: 1.0,
            order: 5,
        };
        assert!(oustaloup(0.5, &band).is_err());
    }

    /// Worst phase error in degrees over `[low * 10^margin, high / 10^margin]`.
    fn interior_phase_error(alpha: f64, cfg: &OustaloupConfig, margin: f64) -> f64 {
        let h = oustaloup(alpha, cfg).unwrap();
        let lo = cfg.omega_low.log10() + margin;
        let hi = cfg.omega_high.log10() - margin;
        (0..=400)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / 400.0))
            .map(|w| {
                let exact = jw_pow(w, alpha);
                (h.eval(w) / exact).arg().to_degrees().abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn band_interior_phase_accuracy() {
        // Tolerance max(1 deg, 2% of alpha * 90 deg), two decades inside the band.
        let cfg = OustaloupConfig::default();
        for alpha in [0.25, 0.5, 0.75, 1.5] {
            let tol = f64::max(1.0, 0.02 * alpha * 90.0);
            let err = interior_phase_error(alpha, &cfg, 2.0);
            assert!(err <= tol, "alpha {alpha}: {err:.3} deg > {tol:.3}");
        }
    }

    #[test]
    fn one_decade_from_edge_is_limited_by_band_not_order() {
        // At one decade from the band edges the truncation of the pole/zero
        // ladder dominates: a denser filter does not help.
        let e11 = interior_phase_error(0.5, &OustaloupConfig::with_order(11), 1.0);
        let e31 = interior_phase_error(0.5, &OustaloupConfig::with_order(31), 1.0);
        assert!(e11 > 2.0 && e31 > 2.0);
        assert!(e31 >= e11 - 0.1);
    }

    #[test]
    fn default_filter_interior_error_bounded() {
        let cfg = OustaloupConfig::default();
        for alpha in [0.25, 0.5, 0.75, 1.5] {
            assert!(interior_phase_error(alpha, &cfg, 1.0) < 4.5);
        }
    }
}
