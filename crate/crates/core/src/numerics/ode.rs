use super::roots::eigenvalues;
use crate::error::{invalid, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default cap on `|lambda_max| * dt` for fixed-step RK4.
pub const RK4_STIFFNESS_CAP: f64 = 0.1;

/// Classical RK4 simulation of a SISO system from zero state.
///
/// The input is sampled at the output instants; half-step values use linear
/// interpolation between neighbouring samples.
pub fn rk4_simulate(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    d: f64,
    input: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    rk4_simulate_with_cap(a, b, c, d, input, dt, RK4_STIFFNESS_CAP)
}

pub fn rk4_simulate_with_cap(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    d: f64,
    input: &[f64],
    dt: f64,
    cap: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let n = a.nrows();
    if a.ncols() != n || b.len() != n || c.len() != n {
        return Err(invalid("state-space dimensions are inconsistent"));
    }
    if n > 0 {
        let lambda = eigenvalues(a)?
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if lambda * dt > cap {
            return Err(Error::StiffStep {
                dt,
                lambda,
                suggested: cap / lambda,
            });
        }
    }
    let mut x = DVector::<f64>::zeros(n);
    let mut y = Vec::with_capacity(input.len());
    let deriv = |x: &DVector<f64>, u: f64| a * x + b * u;
    for k in 0..input.len() {
        let u0 = input[k];
        y.push(c.dot(&x) + d * u0);
        if k + 1 == input.len() {
            break;
        }
        let u1 = input[k + 1];
        let um = 0.5 * (u0 + u1);
        let k1 = deriv(&x, u0);
        let k2 = deriv(&(&x + &k1 * (0.5 * dt)), um);
        let k3 = deriv(&(&x + &k2 * (0.5 * dt)), um);
        let k4 = deriv(&(&x + &k3 * dt), u1);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(y)
}

/// Zero-order-hold discretization `(Phi, Gamma)` from the exponential of
/// `[[A dt, B dt], [0, 0]]`.
pub fn zoh_discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n {
        return Err(invalid("state-space dimensions are inconsistent"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let mut aug = DMatrix::<f64>::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = aug.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::Realization("matrix exponential overflowed".into()));
    }
    Ok((
        e.view((0, 0), (n, n)).into_owned(),
        e.view((0, n), (n, m)).into_owned(),
    ))
}

/// Discrete-time state-space model stored row-major for a tight update loop.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    n: usize,
    m: usize,
    p: usize,
    phi: Vec<f64>,
    gamma: Vec<f64>,
    c: Vec<f64>,
    d: Vec<f64>,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

impl DiscreteSystem {
    pub fn from_continuous(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
        d: &DMatrix<f64>,
        dt: f64,
    ) -> Result<Self> {
        let (phi, gamma) = zoh_discretize(a, b, dt)?;
        if c.ncols() != a.nrows() || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(invalid("output matrices are inconsistent"));
        }
        Ok(Self {
            n: a.nrows(),
            m: b.ncols(),
            p: c.nrows(),
            phi: row_major(&phi),
            gamma: row_major(&gamma),
            c: row_major(c),
            d: row_major(d),
        })
    }

    pub fn inputs(&self) -> usize {
        self.m
    }

    pub fn outputs(&self) -> usize {
        self.p
    }

    /// Runs `steps` samples from zero state. `input(k, u)` fills the input
    /// vector at sample `k`. Stops early when any output exceeds `limit` in
    /// magnitude or turns non-finite; the second return value flags that.
    pub fn simulate<F>(&self, steps: usize, input: F, limit: f64) -> (Vec<Vec<f64>>, bool)
    where
        F: FnMut(usize, &mut [f64]),
    {
        self.simulate_watching(steps, input, limit, self.p)
    }

    /// As `simulate`, but only the first `watched` outputs are checked against `limit`.
    pub fn simulate_watching<F>(&self, steps: usize, mut input: F, limit: f64, watched: usize) -> (Vec<Vec<f64>>, bool)
    where
        F: FnMut(usize, &mut [f64]),
    {
        let (n, m, p) = (self.n, self.m, self.p);
        let mut x = vec![0.0; n];
        let mut xn = vec![0.0; n];
        let mut u = vec![0.0; m];
        let mut out: Vec<Vec<f64>> = (0..p).map(|_| Vec::with_capacity(steps)).collect();
        for k in 0..steps {
            input(k, &mut u);
            let mut blown = false;
            for (i, o) in out.iter_mut().enumerate() {
                let cr = &self.c[i * n..(i + 1) * n];
                let dr = &self.d[i * m..(i + 1) * m];
                let y: f64 = cr.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                    + dr.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
                if i < watched && (!y.is_finite() || y.abs() > limit) {
                    blown = true;
                }
                o.push(y);
            }
            if blown {
                return (out, true);
            }
            for i in 0..n {
                let pr = &self.phi[i * n..(i + 1) * n];
                let gr = &self.gamma[i * m..(i + 1) * m];
                xn[i] = pr.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>()
                    + gr.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
            }
            std::mem::swap(&mut x, &mut xn);
        }
        (out, false)
    }
}
