use crate::error::{invalid, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

/// Exponents closer than this are treated as equal and merged.
pub const EXPONENT_MERGE_TOL: f64 = 1e-12;

/// One term `coeff * s^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracTerm {
    pub coeff: f64,
    pub exponent: f64,
}

impl FracTerm {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Self { coeff, exponent }
    }
}

/// `(j w)^e`, exact for integer `e`.
pub fn jw_pow(omega: f64, e: f64) -> Complex64 {
    if e == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    if e.fract() == 0.0 && e.abs() < 64.0 {
        let k = e as i32;
        let m = omega.powi(k);
        return match k.rem_euclid(4) {
            0 => Complex64::new(m, 0.0),
            1 => Complex64::new(0.0, m),
            2 => Complex64::new(-m, 0.0),
            _ => Complex64::new(0.0, -m),
        };
    }
    let m = omega.powf(e);
    let (s, c) = (e * FRAC_PI_2).sin_cos();
    Complex64::new(m * c, m * s)
}

/// Sum of real-power terms in strictly descending exponent order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FracPoly {
    terms: Vec<FracTerm>,
}

impl FracPoly {
    /// Merges equal exponents, drops zero coefficients and sorts descending.
    pub fn new(mut terms: Vec<FracTerm>) -> Result<Self> {
        for t in &terms {
            if !t.coeff.is_finite() || !t.exponent.is_finite() {
                return Err(invalid(format!("non-finite term {} s^{}", t.coeff, t.exponent)));
            }
            if t.exponent < 0.0 {
                return Err(invalid(format!("negative exponent {}", t.exponent)));
            }
        }
        terms.sort_by(|a, b| b.exponent.total_cmp(&a.exponent));
        let mut merged: Vec<FracTerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if (last.exponent - t.exponent).abs() <= EXPONENT_MERGE_TOL => {
                    last.coeff += t.coeff;
                }
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        if merged.is_empty() {
            return Err(invalid("polynomial has no nonzero terms"));
        }
        Ok(Self { terms: merged })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(vec![FracTerm::new(c, 0.0)])
    }

    /// Integer-order polynomial from descending coefficients.
    pub fn from_coeffs(coeffs: &[f64]) -> Result<Self> {
        let n = coeffs.len();
        Self::new(
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| FracTerm::new(*c, (n - 1 - i) as f64))
                .collect(),
        )
    }

    pub fn terms(&self) -> &[FracTerm] {
        &self.terms
    }

    pub fn leading(&self) -> FracTerm {
        self.terms[0]
    }

    pub fn lowest(&self) -> FracTerm {
        *self.terms.last().expect("non-empty by construction")
    }

    pub fn is_integer_order(&self) -> bool {
        self.terms.iter().all(|t| t.exponent.fract() == 0.0)
    }

    /// Value at `s = j omega`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.coeff * jw_pow(omega, t.exponent))
            .sum()
    }

    /// Derivative with respect to `omega` of the value at `s = j omega`.
    pub fn eval_domega(&self, omega: f64) -> Complex64 {
        self.terms
            .iter()
            .filter(|t| t.exponent != 0.0)
            .map(|t| {
                t.coeff * t.exponent * jw_pow(omega, t.exponent) / omega
            })
            .sum()
    }

    /// Descending coefficients of an integer-order polynomial (fractional
    /// exponents are truncated).
    pub fn to_coeffs(&self) -> Vec<f64> {
        let deg = self.leading().exponent as usize;
        let mut c = vec![0.0; deg + 1];
        for t in &self.terms {
            c[deg - t.exponent as usize] += t.coeff;
        }
        c
    }

    pub fn mul(&self, other: &FracPoly) -> Result<FracPoly> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(FracTerm::new(a.coeff * b.coeff, a.exponent + b.exponent));
            }
        }
        FracPoly::new(terms)
    }

    pub fn scale(&self, k: f64) -> Result<FracPoly> {
        FracPoly::new(
            self.terms
                .iter()
                .map(|t| FracTerm::new(k * t.coeff, t.exponent))
                .collect(),
        )
    }
}

impl<'de> Deserialize<'de> for FracPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            terms: Vec<FracTerm>,
        }
        let raw = Raw::deserialize(d)?;
        FracPoly::new(raw.terms).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_order() {
        let p = FracPoly::new(vec![
            FracTerm::new(1.0, 0.5),
            FracTerm::new(2.0, 2.0),
            FracTerm::new(3.0, 0.5),
            FracTerm::new(0.0, 7.0),
        ])
        .unwrap();
        assert_eq!(p.terms(), &[FracTerm::new(2.0, 2.0), FracTerm::new(4.0, 0.5)]);
    }

    #[test]
    fn rejects_empty_and_negative() {
        assert!(FracPoly::new(vec![]).is_err());
        assert!(FracPoly::new(vec![FracTerm::new(1.0, 1.0), FracTerm::new(-1.0, 1.0)]).is_err());
        assert!(FracPoly::new(vec![FracTerm::new(1.0, -0.5)]).is_err());
    }

    #[test]
    fn integer_powers_exact() {
        assert_eq!(jw_pow(2.0, 1.0), Complex64::new(0.0, 2.0));
        assert_eq!(jw_pow(2.0, 2.0), Complex64::new(-4.0, 0.0));
        assert_eq!(jw_pow(2.0, 3.0), Complex64::new(0.0, -8.0));
    }

    #[test]
    fn half_power_phase() {
        let z = jw_pow(4.0, 0.5);
        assert!((z.norm() - 2.0).abs() < 1e-14);
        assert!((z.arg() - std::f64::consts::FRAC_PI_4).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_difference() {
        let p = FracPoly::new(vec![
            FracTerm::new(1.0, 2.109),
            FracTerm::new(1.2157, 1.015),
            FracTerm::new(0.42515, 0.0),
        ])
        .unwrap();
        let w = 0.7;
        let h = 1e-6;
        let fd = (p.eval(w + h) - p.eval(w - h)) / (2.0 * h);
        assert!((fd - p.eval_domega(w)).norm() < 1e-8);
    }
}
