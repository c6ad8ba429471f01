use super::fotf::FracTransferFunction;
use super::oustaloup::{power_rational, split_order, OustaloupConfig};
use super::pade::pade_delay;
use super::poly::{FracPoly, EXPONENT_MERGE_TOL};
use crate::error::{invalid, Error, Result};
use crate::numerics::polynomial_roots;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default cap on the denominator degree produced by [`rationalize`].
pub const DEFAULT_DEGREE_CAP: usize = 80;

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    let mut out = vec![0.0; n];
    for (i, x) in a.iter().enumerate() {
        out[n - a.len() + i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[n - b.len() + i] += y;
    }
    out
}

pub fn poly_eval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().fold(Complex64::new(0.0, 0.0), |acc, x| acc * s + x)
}

fn trim(c: &[f64]) -> &[f64] {
    let start = c.iter().position(|x| *x != 0.0).unwrap_or(c.len().saturating_sub(1));
    &c[start..]
}

/// Ratio of real polynomials in descending powers; denominator is monic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalTf {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        if num.is_empty() || den.is_empty() {
            return Err(invalid("empty coefficient list"));
        }
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(invalid("non-finite polynomial coefficient"));
        }
        let den = trim(&den).to_vec();
        let lead = den[0];
        if lead == 0.0 {
            return Err(invalid("denominator is identically zero"));
        }
        let num = trim(&num).to_vec();
        if lead == 1.0 {
            return Ok(Self { num, den });
        }
        Ok(Self {
            num: num.iter().map(|c| c / lead).collect(),
            den: den.iter().map(|c| c / lead).collect(),
        })
    }

    pub fn unity() -> Self {
        Self {
            num: vec![1.0],
            den: vec![1.0],
        }
    }

    /// `s^k` for any integer `k`.
    pub fn monomial(k: i32) -> Self {
        let mut p = vec![1.0];
        p.extend(std::iter::repeat(0.0).take(k.unsigned_abs() as usize));
        if k >= 0 {
            Self { num: p, den: vec![1.0] }
        } else {
            Self { num: vec![1.0], den: p }
        }
    }

    pub fn num(&self) -> &[f64] {
        &self.num
    }

    pub fn den(&self) -> &[f64] {
        &self.den
    }

    pub fn degree(&self) -> usize {
        self.den.len() - 1
    }

    pub fn is_proper(&self) -> bool {
        self.num.len() <= self.den.len()
    }

    pub fn eval(&self, omega: f64) -> Complex64 {
        let s = Complex64::new(0.0, omega);
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::new(poly_mul(&self.num, &other.num), poly_mul(&self.den, &other.den))
            .expect("product of valid rational functions")
    }

    pub fn add(&self, other: &Self) -> Self {
        let num = poly_add(
            &poly_mul(&self.num, &other.den),
            &poly_mul(&other.num, &self.den),
        );
        Self::new(num, poly_mul(&self.den, &other.den)).expect("sum of valid rational functions")
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.iter().map(|c| c * k).collect(),
            den: self.den.clone(),
        }
    }

    pub fn reciprocal(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    /// Value at `s = 0` when the denominator does not vanish there.
    pub fn dc_gain(&self) -> Option<f64> {
        let d = *self.den.last().unwrap();
        (d != 0.0).then(|| self.num.last().unwrap() / d)
    }

    /// `g / (1 + g)`; no pole-zero cancellation is attempted.
    pub fn feedback_unity(&self) -> Result<Self> {
        Self::new(self.num.clone(), poly_add(&self.den, &self.num))
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        polynomial_roots(&self.den)
    }
}

/// Default stability margin on pole real parts.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// True iff every denominator root has real part below `-margin`.
pub fn is_stable(g: &RationalTf, margin: f64) -> Result<bool> {
    if g.degree() == 0 {
        return Err(invalid("stability needs a denominator of degree >= 1"));
    }
    Ok(g.poles()?.iter().all(|p| p.re < -margin))
}

/// Rational form of a fractional polynomial: terms sharing a fractional
/// exponent part share one Oustaloup filter.
pub fn rationalize_poly(p: &FracPoly, cfg: &OustaloupConfig) -> Result<RationalTf> {
    let mut groups: Vec<(f64, Vec<f64>)> = Vec::new();
    for t in p.terms() {
        let (k, f) = split_order(t.exponent);
        let f = if f < EXPONENT_MERGE_TOL || 1.0 - f < EXPONENT_MERGE_TOL { 0.0 } else { f };
        let k = if f == 0.0 { t.exponent.round() as usize } else { k as usize };
        let mut mono = vec![0.0; k + 1];
        mono[0] = t.coeff;
        match groups.iter_mut().find(|(g, _)| (g - f).abs() <= EXPONENT_MERGE_TOL) {
            Some((_, poly)) => *poly = poly_add(poly, &mono),
            None => groups.push((f, mono)),
        }
    }
    let mut acc: Option<RationalTf> = None;
    for (f, poly) in groups {
        let part = power_rational(f, cfg)?.mul(&RationalTf::new(poly, vec![1.0])?);
        acc = Some(match acc {
            None => part,
            Some(a) => a.add(&part),
        });
    }
    Ok(acc.expect("non-empty polynomial"))
}

/// Replaces every fractional power by its Oustaloup realization and the delay
/// by a Pade approximation.
pub fn rationalize(g: &FracTransferFunction, cfg: &OustaloupConfig, pade_order: usize) -> Result<RationalTf> {
    rationalize_with_cap(g, cfg, pade_order, DEFAULT_DEGREE_CAP)
}

pub fn rationalize_with_cap(
    g: &FracTransferFunction,
    cfg: &OustaloupConfig,
    pade_order: usize,
    cap: usize,
) -> Result<RationalTf> {
    cfg.validate()?;
    let base = if g.is_integer_order() {
        RationalTf::new(g.num().to_coeffs(), g.den().to_coeffs())?
    } else {
        let n = rationalize_poly(g.num(), cfg)?;
        let d = rationalize_poly(g.den(), cfg)?;
        n.mul(&d.reciprocal()?)
    };
    let r = if g.delay() > 0.0 {
        base.mul(&pade_delay(g.delay(), pade_order)?)
    } else {
        base
    };
    let degree = r.degree().max(r.num().len() - 1);
    if degree > cap {
        return Err(Error::DegreeCap { degree, cap });
    }
    Ok(r)
}
