use super::fotf::FracTransferFunction;
use super::oustaloup::{split_order, OustaloupConfig, OustaloupFilter};
use super::pade::pade_delay;
use super::poly::{FracTerm, EXPONENT_MERGE_TOL};
use super::rational::RationalTf;
use crate::error::{invalid, Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Continuous-time state-space model `x' = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(invalid(format!(
                "inconsistent dimensions A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (p, m) = d.shape();
        Self {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(p, 0),
            d,
        }
    }

    pub fn scalar(k: f64) -> Self {
        Self::static_gain(DMatrix::from_element(1, 1, k))
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// Block-diagonal stacking of independent systems.
    pub fn append(blocks: &[StateSpace]) -> Self {
        let n: usize = blocks.iter().map(|s| s.states()).sum();
        let m: usize = blocks.iter().map(|s| s.inputs()).sum();
        let p: usize = blocks.iter().map(|s| s.outputs()).sum();
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, m);
        let mut c = DMatrix::zeros(p, n);
        let mut d = DMatrix::zeros(p, m);
        let (mut i, mut j, mut k) = (0, 0, 0);
        for s in blocks {
            let (ns, ms, ps) = (s.states(), s.inputs(), s.outputs());
            a.view_mut((i, i), (ns, ns)).copy_from(&s.a);
            b.view_mut((i, j), (ns, ms)).copy_from(&s.b);
            c.view_mut((k, i), (ps, ns)).copy_from(&s.c);
            d.view_mut((k, j), (ps, ms)).copy_from(&s.d);
            i += ns;
            j += ms;
            k += ps;
        }
        Self { a, b, c, d }
    }

    /// Closes the interconnection `u = M y + N w`, `z = P y + Q w` around this
    /// system and returns the map from external inputs `w` to outputs `z`.
    pub fn connect(&self, m: &DMatrix<f64>, n: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<Self> {
        let (nu, ny) = (self.inputs(), self.outputs());
        if m.shape() != (nu, ny) || n.nrows() != nu || p.ncols() != ny || q.shape() != (p.nrows(), n.ncols()) {
            return Err(invalid("interconnection matrices do not match the system"));
        }
        let lhs = DMatrix::<f64>::identity(nu, nu) - m * &self.d;
        let e = lhs
            .try_inverse()
            .ok_or_else(|| Error::Realization("algebraic loop is singular".into()))?;
        let em = &e * m;
        let en = &e * n;
        let a = &self.a + &self.b * &em * &self.c;
        let b = &self.b * &en;
        let y_x = &self.c + &self.d * &em * &self.c;
        let y_w = &self.d * &en;
        let c = p * y_x;
        let d = p * y_w + q;
        Self::new(a, b, c, d)
    }

    /// `next` driven by the outputs of `self`.
    pub fn series(&self, next: &StateSpace) -> Result<Self> {
        if next.inputs() != self.outputs() {
            return Err(invalid("series connection dimension mismatch"));
        }
        let (n1, n2) = (self.states(), next.states());
        let mut a = DMatrix::zeros(n1 + n2, n1 + n2);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&next.b * &self.c));
        a.view_mut((n1, n1), (n2, n2)).copy_from(&next.a);
        let mut b = DMatrix::zeros(n1 + n2, self.inputs());
        b.view_mut((0, 0), (n1, self.inputs())).copy_from(&self.b);
        b.view_mut((n1, 0), (n2, self.inputs())).copy_from(&(&next.b * &self.d));
        let mut c = DMatrix::zeros(next.outputs(), n1 + n2);
        c.view_mut((0, 0), (next.outputs(), n1)).copy_from(&(&next.d * &self.c));
        c.view_mut((0, n1), (next.outputs(), n2)).copy_from(&next.c);
        let d = &next.d * &self.d;
        Self::new(a, b, c, d)
    }

    /// Output-scaled copy.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            c: &self.c * k,
            d: &self.d * k,
        }
    }

    /// Markov parameter `C A^k B` as a matrix.
    pub fn markov(&self, k: usize) -> DMatrix<f64> {
        let mut m = self.b.clone();
        for _ in 0..k {
            m = &self.a * m;
        }
        &self.c * m
    }

    /// `C (j w I - A)^-1 B + D`.
    pub fn freq_response(&self, omega: f64) -> Result<DMatrix<Complex64>> {
        let n = self.states();
        let cd = self.d.map(|v| Complex64::new(v, 0.0));
        if n == 0 {
            return Ok(cd);
        }
        let jw = Complex64::new(0.0, omega);
        let lhs = DMatrix::<Complex64>::identity(n, n) * jw - self.a.map(|v| Complex64::new(v, 0.0));
        let rhs = self.b.map(|v| Complex64::new(v, 0.0));
        let x = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("j{omega} is an eigenvalue")))?;
        Ok(self.c.map(|v| Complex64::new(v, 0.0)) * x + cd)
    }

    /// SISO frequency response.
    pub fn siso_response(&self, omega: f64) -> Result<Complex64> {
        Ok(self.freq_response(omega)?[(0, 0)])
    }
}

/// First-order section cascade for `gain * Oust(f)` (SISO, biproper).
pub fn oustaloup_ss(f: f64, gain: f64, cfg: &OustaloupConfig) -> Result<StateSpace> {
    if f == 0.0 {
        return Ok(StateSpace::scalar(gain));
    }
    let filt = OustaloupFilter::new(f, cfg)?;
    let n = filt.zeros.len();
    let mut a = DMatrix::zeros(n, n);
    let b = DMatrix::from_element(n, 1, 1.0);
    let mut c = DMatrix::zeros(1, n);
    for i in 0..n {
        let (z, p) = (filt.zeros[i], filt.poles[i]);
        a[(i, i)] = -p;
        for j in (i + 1)..n {
            a[(j, i)] = z - p;
        }
        c[(0, i)] = z - p;
    }
    let k = gain * filt.gain;
    StateSpace::new(a, b, c * k, DMatrix::from_element(1, 1, k))
}

/// `gain * Oust(f)` followed by `m` integrators, with outputs
/// `[y, y', ..., y^(m)]` where `y` is the final integrator output.
pub(crate) fn power_chain(f: f64, gain: f64, m: usize, cfg: &OustaloupConfig) -> Result<StateSpace> {
    let o = oustaloup_ss(f, gain, cfg)?;
    let no = o.states();
    let n = no + m;
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 1);
    a.view_mut((0, 0), (no, no)).copy_from(&o.a);
    b.view_mut((0, 0), (no, 1)).copy_from(&o.b);
    if m > 0 {
        a.view_mut((no, 0), (1, no)).copy_from(&o.c);
        b[(no, 0)] = o.d[(0, 0)];
        for i in 1..m {
            a[(no + i, no + i - 1)] = 1.0;
        }
    }
    let mut c = DMatrix::zeros(m + 1, n);
    let mut d = DMatrix::zeros(m + 1, 1);
    for j in 0..=m {
        if j == m {
            c.view_mut((j, 0), (1, no)).copy_from(&o.c);
            d[(j, 0)] = o.d[(0, 0)];
        } else {
            c[(j, no + (m - j - 1))] = 1.0;
        }
    }
    StateSpace::new(a, b, c, d)
}

/// Controllable canonical form of a proper rational function, realized in
/// the frequency-scaled variable `s / w0` to keep entries near unity.
pub fn rational_ss(tf: &RationalTf, w0: f64) -> Result<StateSpace> {
    if !tf.is_proper() {
        return Err(invalid("cannot realize an improper rational function"));
    }
    if !(w0 > 0.0) {
        return Err(invalid("frequency scale must be positive"));
    }
    let n = tf.degree();
    let den = tf.den();
    let mut num = vec![0.0; n + 1 - tf.num().len()];
    num.extend_from_slice(tf.num());
    let dh: Vec<f64> = (0..=n).map(|k| den[k] / w0.powi(k as i32)).collect();
    let nh: Vec<f64> = (0..=n).map(|k| num[k] / w0.powi(k as i32)).collect();
    if n == 0 {
        return Ok(StateSpace::scalar(nh[0] / dh[0]));
    }
    let mut a = DMatrix::zeros(n, n);
    for k in 0..n {
        a[(0, k)] = -dh[k + 1] * w0;
    }
    for i in 1..n {
        a[(i, i - 1)] = w0;
    }
    let mut b = DMatrix::zeros(n, 1);
    b[(0, 0)] = w0;
    let mut c = DMatrix::zeros(1, n);
    for k in 0..n {
        c[(0, k)] = nh[k + 1] - nh[0] * dh[k + 1];
    }
    StateSpace::new(a, b, c, DMatrix::from_element(1, 1, nh[0]))
}

/// Pade block for `exp(-s L)`; empty when `L = 0`.
pub fn pade_ss(delay: f64, order: usize) -> Result<StateSpace> {
    if delay == 0.0 {
        return Ok(StateSpace::scalar(1.0));
    }
    rational_ss(&pade_delay(delay, order)?, 1.0 / delay)
}

struct Group {
    frac: f64,
    /// (coefficient, derivative order) pairs.
    members: Vec<(f64, usize)>,
}

fn group_terms(terms: &[FracTerm]) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for t in terms {
        let (k, f) = split_order(t.exponent);
        let (k, f) = if f < EXPONENT_MERGE_TOL {
            (k, 0.0)
        } else if 1.0 - f < EXPONENT_MERGE_TOL {
            (k + 1, 0.0)
        } else {
            (k, f)
        };
        match groups.iter_mut().find(|g| (g.frac - f).abs() <= EXPONENT_MERGE_TOL) {
            Some(g) => g.members.push((t.coeff, k as usize)),
            None => groups.push(Group {
                frac: f,
                members: vec![(t.coeff, k as usize)],
            }),
        }
    }
    groups
}

/// State-space realization of the rationalized FOTF (same transfer function
/// as `rationalize`), built from well-conditioned blocks.
///
/// `1/den` is realized as the leading term's inverse power in a feedback loop
/// with the remaining terms; each numerator or feedback term taps the
/// derivative outputs of that loop, and terms sharing a fractional exponent
/// part share one Oustaloup filter. The Pade block is appended in series.
pub fn realize_fotf(g: &FracTransferFunction, cfg: &OustaloupConfig, pade_order: usize) -> Result<StateSpace> {
    cfg.validate()?;
    let lead = g.den().leading();
    let (m, f0) = {
        let (k, f) = split_order(lead.exponent);
        if f < EXPONENT_MERGE_TOL {
            (k as usize, 0.0)
        } else if 1.0 - f < EXPONENT_MERGE_TOL {
            (k as usize + 1, 0.0)
        } else {
            (k as usize, f)
        }
    };
    let forward = power_chain(-f0, 1.0 / lead.coeff, m, cfg)?;
    let fb = group_terms(&g.den().terms()[1..]);
    let nm = group_terms(g.num().terms());
    if let Some(k) = nm.iter().flat_map(|gr| gr.members.iter().map(|x| x.1)).max() {
        if k > m {
            return Err(Error::Realization(format!(
                "numerator derivative order {k} exceeds denominator order {m}: improper"
            )));
        }
    }

    let mut blocks = vec![forward];
    for gr in fb.iter().chain(&nm) {
        blocks.push(oustaloup_ss(gr.frac, 1.0, cfg)?);
    }
    let sys = StateSpace::append(&blocks);
    let nin = sys.inputs();
    let nout = sys.outputs();
    let mut mm = DMatrix::zeros(nin, nout);
    let mut nn = DMatrix::zeros(nin, 1);
    let mut pp = DMatrix::zeros(1, nout);
    nn[(0, 0)] = 1.0;
    for (i, gr) in fb.iter().enumerate() {
        let (row, col) = (1 + i, m + 1 + i);
        mm[(0, col)] = -1.0;
        for (c, k) in &gr.members {
            mm[(row, *k)] += c;
        }
    }
    for (i, gr) in nm.iter().enumerate() {
        let (row, col) = (1 + fb.len() + i, m + 1 + fb.len() + i);
        pp[(0, col)] = 1.0;
        for (c, k) in &gr.members {
            mm[(row, *k)] += c;
        }
    }
    let core = sys.connect(&mm, &nn, &pp, &DMatrix::zeros(1, 1))?;
    if g.delay() > 0.0 {
        core.series(&pade_ss(g.delay(), pade_order)?)
    } else {
        Ok(core)
    }
}
