use super::curves::FrequencyCurve;
use super::sweep::GainSweepReport;
use crate::error::Result;
use crate::time::SimResult;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct BodeRow {
    omega: f64,
    mag_db: f64,
    phase_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct StepRow {
    t: f64,
    y: f64,
    u: f64,
    e: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SweepRow {
    gain: f64,
    mp_pct: Option<f64>,
    t_r: Option<f64>,
    t_s: Option<f64>,
    stable: bool,
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Columns `omega, mag_db, phase_deg`.
pub fn write_bode_csv(curve: &FrequencyCurve, path: &Path) -> Result<()> {
    let rows = (0..curve.len()).map(|i| BodeRow {
        omega: curve.omega[i],
        mag_db: curve.magnitude_db[i],
        phase_deg: curve.phase_deg[i],
    });
    write_rows(path, &["omega", "mag_db", "phase_deg"], rows)
}

pub fn read_bode_csv(path: &Path) -> Result<FrequencyCurve> {
    let rows: Vec<BodeRow> = read_rows(path)?;
    Ok(FrequencyCurve {
        omega: rows.iter().map(|r| r.omega).collect(),
        magnitude_db: rows.iter().map(|r| r.mag_db).collect(),
        phase_deg: rows.iter().map(|r| r.phase_deg).collect(),
        gaps: Vec::new(),
    })
}

/// Columns `t, y, u, e`.
pub fn write_step_csv(r: &SimResult, path: &Path) -> Result<()> {
    let rows = (0..r.len()).map(|i| StepRow {
        t: r.t[i],
        y: r.y[i],
        u: r.u[i],
        e: r.e[i],
    });
    write_rows(path, &["t", "y", "u", "e"], rows)
}

pub fn read_step_csv(path: &Path) -> Result<SimResult> {
    let rows: Vec<StepRow> = read_rows(path)?;
    Ok(SimResult {
        t: rows.iter().map(|r| r.t).collect(),
        y: rows.iter().map(|r| r.y).collect(),
        u: rows.iter().map(|r| r.u).collect(),
        e: rows.iter().map(|r| r.e).collect(),
        overflow: false,
    })
}

/// Columns `gain, mp_pct, t_r, t_s, stable`; undefined metrics are empty cells.
pub fn write_sweep_csv(rep: &GainSweepReport, path: &Path) -> Result<()> {
    let rows = rep.entries.iter().map(|e| SweepRow {
        gain: e.gain,
        mp_pct: e.metrics.map(|m| m.mp_pct),
        t_r: e.metrics.and_then(|m| m.t_r),
        t_s: e.metrics.and_then(|m| m.t_s),
        stable: e.stable,
    });
    write_rows(path, &["gain", "mp_pct", "t_r", "t_s", "stable"], rows)
}
