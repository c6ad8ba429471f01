use super::closed_loop::{closed_loop_realize, DiscreteLoop, SimConfig};
use super::index::{performance_index, IndexKind, IndexWeights};
use crate::analysis::step_metrics;
use crate::error::{invalid, Error, Result};
use crate::fractional::{FracTransferFunction, OustaloupConfig, STABILITY_MARGIN};
use crate::freq::FopidParams;
use crate::numerics::{nelder_mead_minimize, BoxBounds, NelderMeadOptions, SolverReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Objective floor for rejected candidates; the violation magnitude is added.
pub const UNSTABLE_PENALTY: f64 = 1e6;

/// Oustaloup pairs used for the independent stability re-check.
pub const RECHECK_ORDER: usize = 15;

/// `{Kp, Ki, Kd} in [0.01, 500]`, `{lambda, mu} in [0.01, 2]`.
pub fn default_bounds() -> BoxBounds {
    BoxBounds::new(vec![0.01, 0.01, 0.01, 0.01, 0.01], vec![500.0, 500.0, 500.0, 2.0, 2.0])
        .expect("static bounds are ordered")
}

#[derive(Debug, Clone)]
pub struct TimeTuneOptions {
    /// Simplex starts, taken as the best distinct points of the screening sample.
    pub starts: usize,
    /// Random candidates evaluated to pick the starts.
    pub screen: usize,
    pub seed: u64,
    /// Evaluation budget for each of the two simplex passes of a start.
    pub max_evals: usize,
    pub tol: f64,
    /// Natural-coordinate box `[Kp, Ki, Kd, lambda, mu]`; gain bounds must be positive.
    pub bounds: BoxBounds,
    pub weights: IndexWeights,
    pub x0: Option<FopidParams>,
}

impl Default for TimeTuneOptions {
    fn default() -> Self {
        Self {
            starts: 6,
            screen: 48,
            seed: 0,
            max_evals: 600,
            tol: 1e-7,
            bounds: default_bounds(),
            weights: IndexWeights::default(),
            x0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTuneResult {
    pub params: FopidParams,
    pub j_min: f64,
    pub index: IndexKind,
    pub mp_pct: f64,
    pub t_r: Option<f64>,
    /// Stable with the configured realization and with the re-check realization.
    pub stable: bool,
    pub evaluations: usize,
}

/// Objective of one candidate: the index of its unit-step response, or
/// `UNSTABLE_PENALTY + violation` when the loop cannot be realized, is
/// unstable or blows up.
pub fn candidate_objective(
    p: &FracTransferFunction,
    c: &FopidParams,
    kind: IndexKind,
    weights: &IndexWeights,
    cfg: &SimConfig,
) -> f64 {
    let Ok(cl) = closed_loop_realize(p, c, cfg) else {
        return UNSTABLE_PENALTY + 1.0;
    };
    let abscissa = match cl.spectral_abscissa() {
        Ok(a) if a.is_finite() || a == f64::NEG_INFINITY => a,
        _ => return UNSTABLE_PENALTY + 1.0,
    };
    if abscissa >= -STABILITY_MARGIN {
        return UNSTABLE_PENALTY + abscissa.max(0.0) + STABILITY_MARGIN;
    }
    let Ok(dl) = DiscreteLoop::new(&cl, cfg.dt) else {
        return UNSTABLE_PENALTY + 1.0;
    };
    let r = dl.run(cfg.samples(), 1.0, None);
    let j = performance_index(&r, kind, weights);
    if j.is_finite() {
        j
    } else {
        UNSTABLE_PENALTY + 1.0
    }
}

/// Stability of the loop realized with `RECHECK_ORDER` Oustaloup pairs.
pub fn recheck_stability(p: &FracTransferFunction, c: &FopidParams, cfg: &SimConfig) -> Result<bool> {
    let cfg = SimConfig {
        oustaloup: OustaloupConfig {
            order: RECHECK_ORDER,
            ..cfg.oustaloup
        },
        ..*cfg
    };
    closed_loop_realize(p, c, &cfg)?.is_stable()
}

fn to_x(c: &FopidParams) -> Vec<f64> {
    vec![c.kp.ln(), c.ki.ln(), c.kd.ln(), c.lambda, c.mu]
}

fn to_params(x: &[f64]) -> FopidParams {
    FopidParams {
        kp: x[0].exp(),
        ki: x[1].exp(),
        kd: x[2].exp(),
        lambda: x[3],
        mu: x[4],
    }
}

fn search_bounds(b: &BoxBounds) -> Result<BoxBounds> {
    if b.len() != 5 {
        return Err(invalid("time-domain bounds need five entries"));
    }
    let (lo, hi) = (b.lower(), b.upper());
    if lo[..3].iter().any(|v| *v <= 0.0) {
        return Err(invalid("gain lower bounds must be positive"));
    }
    if lo[3] < 0.0 || hi[3] > 2.0 || lo[4] < 0.0 || hi[4] > 2.0 {
        return Err(invalid("order bounds must lie in [0, 2]"));
    }
    BoxBounds::new(
        vec![lo[0].ln(), lo[1].ln(), lo[2].ln(), lo[3], lo[4]],
        vec![hi[0].ln(), hi[1].ln(), hi[2].ln(), hi[3], hi[4]],
    )
}

fn lex(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Stability-guarded multi-start simplex minimization of one index.
///
/// Gains are searched in log coordinates. A random screening sample
/// (log-uniform gains in `[0.1, 50]`, orders in `[0.5, 1.6]`, both clipped to
/// the box) plus `x0` and the unit controller are scored, and the best
/// `starts` of them seed two simplex passes each. Candidates are ranked by
/// objective, ties broken lexicographically; the first one that is also
/// stable under the re-check realization is returned.
pub fn tune_time_domain(
    p: &FracTransferFunction,
    kind: IndexKind,
    cfg: &SimConfig,
    opts: &TimeTuneOptions,
) -> Result<TimeTuneResult> {
    cfg.validate()?;
    opts.weights.validate()?;
    if opts.starts == 0 {
        return Err(invalid("at least one start is required"));
    }
    let b = search_bounds(&opts.bounds)?;
    let objective = |x: &[f64]| candidate_objective(p, &to_params(x), kind, &opts.weights, cfg);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(kind as u64));
    let mut pool: Vec<Vec<f64>> = Vec::new();
    if let Some(c) = &opts.x0 {
        c.validate()?;
        pool.push(b.clamp(&to_x(c)).0);
    }
    pool.push(b.clamp(&[0.0, 0.0, 0.0, 1.0, 1.0]).0);
    let (l10, l50) = (0.1f64.ln(), 50f64.ln());
    for _ in 0..opts.screen {
        let x = [
            rng.gen_range(l10..l50),
            rng.gen_range(l10..l50),
            rng.gen_range(l10..l50),
            rng.gen_range(0.5..1.6),
            rng.gen_range(0.5..1.6),
        ];
        pool.push(b.clamp(&x).0);
    }
    let mut scored: Vec<(f64, Vec<f64>)> = pool.into_par_iter().map(|x| (objective(&x), x)).collect();
    let mut evaluations = scored.len();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex(&a.1, &b.1)));
    let starts: Vec<Vec<f64>> = scored.iter().take(opts.starts).map(|s| s.1.clone()).collect();

    let nm = |x0: &[f64], step: f64| -> Result<SolverReport> {
        let o = NelderMeadOptions {
            tol: opts.tol,
            max_evals: opts.max_evals,
            initial_step: Some(vec![0.5 * step, 0.5 * step, 0.5 * step, 0.15 * step, 0.15 * step]),
            ..Default::default()
        };
        nelder_mead_minimize(objective, x0, Some(&b), &o)
    };
    let runs: Vec<Result<SolverReport>> = starts
        .par_iter()
        .map(|x0| {
            let first = nm(x0, 1.0)?;
            let mut second = nm(&first.solution, 0.2)?;
            second.evaluations += first.evaluations;
            if first.value < second.value {
                second.solution = first.solution;
                second.value = first.value;
            }
            Ok(second)
        })
        .collect();
    let mut finals: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in runs {
        let r = r?;
        evaluations += r.evaluations;
        finals.push((r.value, r.solution));
    }
    finals.extend(scored.into_iter().take(opts.starts));
    finals.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| lex(&a.1, &b.1)));

    for (j, x) in finals {
        if j >= UNSTABLE_PENALTY {
            break;
        }
        let c = to_params(&x);
        if !recheck_stability(p, &c, cfg)? {
            continue;
        }
        let cl = closed_loop_realize(p, &c, cfg)?;
        let sim = DiscreteLoop::new(&cl, cfg.dt)?.run(cfg.samples(), 1.0, None);
        let m = step_metrics(&sim);
        return Ok(TimeTuneResult {
            params: c,
            j_min: j,
            index: kind,
            mp_pct: m.mp_pct,
            t_r: m.t_r,
            stable: true,
            evaluations,
        });
    }
    Err(Error::NoStableCandidate { starts: opts.starts })
}

/// Tunes for all six indices and their weighted sum.
pub fn tune_all_indices(
    p: &FracTransferFunction,
    cfg: &SimConfig,
    opts: &TimeTuneOptions,
) -> Vec<(IndexKind, Result<TimeTuneResult>)> {
    IndexKind::ALL
        .par_iter()
        .map(|k| (*k, tune_time_domain(p, *k, cfg, opts)))
        .collect()
}
