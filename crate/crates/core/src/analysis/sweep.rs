use super::metrics::{step_metrics, StepMetrics};
use crate::error::{invalid, Result};
use crate::fractional::FracTransferFunction;
use crate::freq::FopidParams;
use crate::time::{closed_loop_realize, DiscreteLoop, SimConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SWEEP_GAINS: [f64; 4] = [0.7, 1.0, 1.3, 1.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub gain: f64,
    pub stable: bool,
    /// `None` when the scaled loop is unstable or could not be realized.
    pub metrics: Option<StepMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSweepReport {
    pub gains: Vec<f64>,
    pub entries: Vec<SweepEntry>,
}

impl GainSweepReport {
    /// Max minus min overshoot over the stable entries (percentage points);
    /// `None` if any entry is unstable.
    pub fn overshoot_spread(&self) -> Option<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for e in &self.entries {
            let m = e.metrics.filter(|m| m.defined)?;
            lo = lo.min(m.mp_pct);
            hi = hi.max(m.mp_pct);
        }
        (hi >= lo).then_some(hi - lo)
    }
}

/// Step metrics of the loop with the controller gains scaled by each multiplier.
pub fn iso_damping_sweep(
    p: &FracTransferFunction,
    c: &FopidParams,
    gains: &[f64],
    cfg: &SimConfig,
) -> Result<GainSweepReport> {
    if gains.is_empty() || gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(invalid("gain multipliers must be positive and finite"));
    }
    cfg.validate()?;
    c.validate()?;
    let entries = gains
        .par_iter()
        .map(|&k| {
            let ck = FopidParams { kp: c.kp * k, ki: c.ki * k, kd: c.kd * k, ..*c };
            let run = || -> Result<Option<StepMetrics>> {
                let cl = closed_loop_realize(p, &ck, cfg)?;
                if !cl.is_stable()? {
                    return Ok(None);
                }
                let sim = DiscreteLoop::new(&cl, cfg.dt)?.run(cfg.samples(), 1.0, None);
                Ok((!sim.overflow).then(|| step_metrics(&sim)))
            };
            let metrics = run().ok().flatten();
            SweepEntry { gain: k, stable: metrics.is_some(), metrics }
        })
        .collect();
    Ok(GainSweepReport { gains: gains.to_vec(), entries })
}
