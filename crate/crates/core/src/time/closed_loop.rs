use crate::error::{invalid, Error, Result};
use crate::fractional::{
    oustaloup_ss, power_chain, realize_fotf, split_order, FracTransferFunction, OustaloupConfig, StateSpace,
    STABILITY_MARGIN,
};
use crate::freq::FopidParams;
use crate::numerics::{eigenvalues, DiscreteSystem};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// An output `|y|` beyond this ends a simulation with the overflow flag set.
pub const OVERFLOW_LIMIT: f64 = 1e6;

const ORDER_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub pade_order: usize,
    pub oustaloup: OustaloupConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 50.0,
            pade_order: 3,
            oustaloup: OustaloupConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(invalid(format!("t_end must be at least dt, got {}", self.t_end)));
        }
        if self.t_end / self.dt > 1e7 {
            return Err(invalid("more than 1e7 samples requested"));
        }
        self.oustaloup.validate()
    }

    /// Number of samples including `t = 0` and `t = t_end`.
    pub fn samples(&self) -> usize {
        (self.t_end / self.dt).round() as usize + 1
    }
}

/// `(integer part, fractional part)` with parts within `ORDER_SNAP` of an
/// integer snapped to it.
fn snapped_split(a: f64) -> (i32, f64) {
    let (k, f) = split_order(a);
    if f < ORDER_SNAP {
        (k, 0.0)
    } else if 1.0 - f < ORDER_SNAP {
        (k + 1, 0.0)
    } else {
        (k, f)
    }
}

/// Unity-feedback loop of a plant and a FOPID controller with inputs
/// `[r, d]` (reference, load disturbance at the plant input) and outputs
/// `[y, e, u]`.
///
/// The integral branch is `Ki Oust(f) / s^n`. The derivative branch
/// `Kd s^k Oust(f)` is never realized on its own: its integer part is moved
/// into the plant as the proper system `s^k P = (A, A^k B, C, C A^(k-1) B)`,
/// which requires the plant's relative degree to be at least `k`. `u` is the
/// controller output for `t > 0`; impulses at input discontinuities are not
/// represented.
#[derive(Debug, Clone)]
pub struct ClosedLoop {
    sys: StateSpace,
}

pub fn closed_loop_realize(p: &FracTransferFunction, c: &FopidParams, cfg: &SimConfig) -> Result<ClosedLoop> {
    ClosedLoop::realize(p, c, cfg)
}

impl ClosedLoop {
    pub fn realize(p: &FracTransferFunction, c: &FopidParams, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        c.validate()?;
        let plant = realize_fotf(p, &cfg.oustaloup, cfg.pade_order)?;
        let ocfg = &cfg.oustaloup;

        let mut kp = c.kp;
        let mut integral = None;
        if c.ki > 0.0 {
            let (fl, f) = snapped_split(-c.lambda);
            if fl == 0 && f == 0.0 {
                kp += c.ki;
            } else {
                integral = Some(power_chain(f, c.ki, (-fl) as usize, ocfg)?);
            }
        }
        let mut derivative = None;
        let mut k_der = 0usize;
        if c.kd > 0.0 {
            let (k, f) = snapped_split(c.mu);
            if k == 0 && f == 0.0 {
                kp += c.kd;
            } else {
                k_der = k as usize;
                derivative = Some(oustaloup_ss(f, c.kd, ocfg)?);
            }
        }

        // Plant with a second input channel carrying s^k.
        let plant = if derivative.is_some() && k_der >= 1 {
            shifted_plant(&plant, k_der)?
        } else {
            plant
        };
        let mut blocks = vec![plant];
        let i_in = blocks.iter().map(StateSpace::inputs).sum::<usize>();
        let i_out = blocks.iter().map(StateSpace::outputs).sum::<usize>();
        if let Some(b) = &integral {
            blocks.push(b.clone());
        }
        let d_in = blocks.iter().map(StateSpace::inputs).sum::<usize>();
        let d_out = blocks.iter().map(StateSpace::outputs).sum::<usize>();
        if let Some(b) = &derivative {
            blocks.push(b.clone());
        }
        let sys = StateSpace::append(&blocks);
        let (nin, nout) = (sys.inputs(), sys.outputs());
        let (u0, y) = (0usize, 0usize);

        let mut m = DMatrix::zeros(nin, nout);
        let mut n = DMatrix::zeros(nin, 2);
        // Controller output entering the plant directly, without d.
        let mut u_row = DMatrix::zeros(1, nout);
        let mut u_q = DMatrix::zeros(1, 2);
        u_row[(0, y)] = -kp;
        u_q[(0, 0)] = kp;
        if integral.is_some() {
            u_row[(0, i_out)] = 1.0;
            m[(i_in, y)] = -1.0;
            n[(i_in, 0)] = 1.0;
        }
        let mut v_row = None;
        if derivative.is_some() {
            m[(d_in, y)] = -1.0;
            n[(d_in, 0)] = 1.0;
            if k_der == 0 {
                u_row[(0, d_out)] = 1.0;
            } else {
                m[(1, d_out)] = 1.0;
                let mut r = DMatrix::zeros(1, nout);
                r[(0, d_out)] = 1.0;
                v_row = Some(r);
            }
        }
        m.row_mut(u0).copy_from(&u_row.row(0));
        n[(u0, 0)] = kp;
        n[(u0, 1)] = 1.0;

        let rows = 3 + usize::from(v_row.is_some());
        let mut pp = DMatrix::zeros(rows, nout);
        let mut qq = DMatrix::zeros(rows, 2);
        pp[(0, y)] = 1.0;
        pp[(1, y)] = -1.0;
        qq[(1, 0)] = 1.0;
        pp.row_mut(2).copy_from(&u_row.row(0));
        qq.row_mut(2).copy_from(&u_q.row(0));
        if let Some(r) = &v_row {
            pp.row_mut(3).copy_from(&r.row(0));
        }
        let mut cl = sys.connect(&m, &n, &pp, &qq)?;

        if v_row.is_some() {
            // u = u_direct + d^k v / dt^k for t > 0.
            let mut cv = cl.c.rows(3, 1).into_owned();
            for _ in 0..k_der - 1 {
                cv = &cv * &cl.a;
            }
            let dv = &cv * &cl.b;
            let cv = &cv * &cl.a;
            let c_u = cl.c.rows(2, 1) + cv;
            let d_u = cl.d.rows(2, 1) + dv;
            let mut c3 = cl.c.rows(0, 3).into_owned();
            let mut d3 = cl.d.rows(0, 3).into_owned();
            c3.row_mut(2).copy_from(&c_u.row(0));
            d3.row_mut(2).copy_from(&d_u.row(0));
            cl = StateSpace::new(cl.a, cl.b, c3, d3)?;
        }
        Ok(Self { sys: cl })
    }

    pub fn system(&self) -> &StateSpace {
        &self.sys
    }

    pub fn states(&self) -> usize {
        self.sys.states()
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        eigenvalues(&self.sys.a)
    }

    /// Largest real part among the closed-loop poles (`-inf` for a static loop).
    pub fn spectral_abscissa(&self) -> Result<f64> {
        Ok(self.poles()?.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.re)))
    }

    pub fn is_stable(&self) -> Result<bool> {
        Ok(self.spectral_abscissa()? < -STABILITY_MARGIN)
    }

    /// `(T, S)` at `omega`: responses from `r` to `y` and to `e`.
    pub fn sensitivity_pair(&self, omega: f64) -> Result<(Complex64, Complex64)> {
        let h = self.sys.freq_response(omega)?;
        Ok((h[(0, 0)], h[(1, 0)]))
    }
}

fn shifted_plant(p: &StateSpace, k: usize) -> Result<StateSpace> {
    if p.d[(0, 0)] != 0.0 {
        return Err(Error::Realization(
            "derivative order >= 1 needs a strictly proper plant".into(),
        ));
    }
    let scale = p.c.norm() * p.b.norm() * (1.0 + p.a.norm()).powi(k as i32);
    let mut akb = p.b.clone();
    for j in 0..k {
        if j + 1 < k {
            let cab = (&p.c * &akb)[(0, 0)];
            if cab.abs() > 1e-9 * scale {
                return Err(Error::Realization(format!(
                    "plant relative degree is below the derivative order {k}"
                )));
            }
        }
        if j + 1 == k {
            let d = (&p.c * &akb)[(0, 0)];
            akb = &p.a * akb;
            let mut b = DMatrix::zeros(p.states(), 2);
            b.column_mut(0).copy_from(&p.b.column(0));
            b.column_mut(1).copy_from(&akb.column(0));
            let dd = DMatrix::from_row_slice(1, 2, &[0.0, d]);
            return StateSpace::new(p.a.clone(), b, p.c.clone(), dd);
        }
        akb = &p.a * akb;
    }
    unreachable!("k >= 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub time: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub e: Vec<f64>,
    /// Set when the run stopped early on a blow-up.
    pub overflow: bool,
}

impl SimResult {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dt(&self) -> f64 {
        if self.t.len() > 1 {
            self.t[1] - self.t[0]
        } else {
            0.0
        }
    }
}

/// Discretized loop, reusable across several runs with the same `dt`.
pub struct DiscreteLoop {
    sys: DiscreteSystem,
    dt: f64,
}

impl DiscreteLoop {
    pub fn new(cl: &ClosedLoop, dt: f64) -> Result<Self> {
        let s = &cl.sys;
        Ok(Self {
            sys: DiscreteSystem::from_continuous(&s.a, &s.b, &s.c, &s.d, dt)?,
            dt,
        })
    }

    /// Zero initial state, reference held at `reference` from `t = 0`.
    pub fn run(&self, samples: usize, reference: f64, disturbance: Option<Disturbance>) -> SimResult {
        let dt = self.dt;
        let (out, overflow) = self.sys.simulate_watching(
            samples,
            |k, w| {
                w[0] = reference;
                w[1] = match disturbance {
                    Some(d) if k as f64 * dt >= d.time - 1e-9 * dt => d.magnitude,
                    _ => 0.0,
                };
            },
            OVERFLOW_LIMIT,
            1,
        );
        let mut it = out.into_iter();
        let y = it.next().unwrap_or_default();
        let e = it.next().unwrap_or_default();
        let u = it.next().unwrap_or_default();
        let t = (0..y.len()).map(|k| k as f64 * dt).collect();
        SimResult { t, y, u, e, overflow }
    }
}

/// Closed-loop response to a held reference and an optional load step.
pub fn simulate(
    cl: &ClosedLoop,
    cfg: &SimConfig,
    reference: f64,
    disturbance: Option<Disturbance>,
) -> Result<SimResult> {
    cfg.validate()?;
    if !reference.is_finite() {
        return Err(invalid("reference must be finite"));
    }
    if let Some(d) = disturbance {
        if !(d.time.is_finite() && d.magnitude.is_finite() && d.time >= 0.0) {
            return Err(invalid("disturbance needs a finite non-negative time and finite magnitude"));
        }
    }
    Ok(DiscreteLoop::new(cl, cfg.dt)?.run(cfg.samples(), reference, disturbance))
}

/// Unit reference step at `t = 0`.
pub fn simulate_step(cl: &ClosedLoop, cfg: &SimConfig, disturbance: Option<Disturbance>) -> Result<SimResult> {
    simulate(cl, cfg, 1.0, disturbance)
}
