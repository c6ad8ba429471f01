use crate::args::GlobalArgs;
use anyhow::{Context, Result};
use fopid_core::fractional::OustaloupConfig;
use fopid_core::time::SimConfig;
use serde::Deserialize;
use std::path::PathBuf;

/// Optional values read from `--config`; every field may be omitted.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    #[serde(default)]
    oustaloup: FileOustaloup,
    #[serde(default)]
    sim: FileSim,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileOustaloup {
    omega_low: Option<f64>,
    omega_high: Option<f64>,
    order: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSim {
    dt: Option<f64>,
    t_end: Option<f64>,
    pade_order: Option<usize>,
}

/// Settings shared by every command after merging defaults, file and flags.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub seed: u64,
    pub sim: SimConfig,
}

impl RunConfig {
    pub fn oustaloup(&self) -> OustaloupConfig {
        self.sim.oustaloup
    }

    pub fn from_args(g: &GlobalArgs) -> Result<Self> {
        let file = match &g.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("cannot read config file {}", path.display()))?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("invalid config file {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let d = SimConfig::default();
        let o = d.oustaloup;
        let sim = SimConfig {
            dt: g.dt.or(file.sim.dt).unwrap_or(d.dt),
            t_end: g.t_end.or(file.sim.t_end).unwrap_or(d.t_end),
            pade_order: g.pade_order.or(file.sim.pade_order).unwrap_or(d.pade_order),
            oustaloup: OustaloupConfig {
                omega_low: g.band_low.or(file.oustaloup.omega_low).unwrap_or(o.omega_low),
                omega_high: g.band_high.or(file.oustaloup.omega_high).unwrap_or(o.omega_high),
                order: g.oustaloup_order.or(file.oustaloup.order).unwrap_or(o.order),
            },
        };
        sim.validate().context("invalid simulation settings")?;
        if sim.pade_order == 0 || sim.pade_order > 10 {
            anyhow::bail!("pade order must be in 1..=10, got {}", sim.pade_order);
        }
        if g.out_dir.exists() && !g.out_dir.is_dir() {
            anyhow::bail!("output path {} exists and is not a directory", g.out_dir.display());
        }
        Ok(Self {
            out_dir: g.out_dir.clone(),
            seed: g.seed.or(file.seed).unwrap_or(0),
            sim,
        })
    }
}
