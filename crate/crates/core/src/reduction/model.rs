use crate::error::{invalid, Error, Result};
use crate::fractional::{term, FracPoly, FracTransferFunction};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Foptd,
    Soptd,
    Nioptd1,
    Nioptd2,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 4] = [Self::Foptd, Self::Soptd, Self::Nioptd1, Self::Nioptd2];

    pub fn label(self) -> &'static str {
        match self {
            Self::Foptd => "FOPTD",
            Self::Soptd => "SOPTD",
            Self::Nioptd1 => "NIOPTD-I",
            Self::Nioptd2 => "NIOPTD-II",
        }
    }

    /// Number of free parameters.
    pub fn dim(self) -> usize {
        match self {
            Self::Foptd => 3,
            Self::Soptd | Self::Nioptd1 => 4,
            Self::Nioptd2 => 6,
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for TemplateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "foptd" => Ok(Self::Foptd),
            "soptd" => Ok(Self::Soptd),
            "nioptd1" | "nioptdi" => Ok(Self::Nioptd1),
            "nioptd2" | "nioptdii" => Ok(Self::Nioptd2),
            other => Err(invalid(format!("unknown template '{other}'"))),
        }
    }
}

/// Reduced-order template with its parameters.
///
/// * FOPTD: `K / (T s + 1) e^{-sL}`
/// * SOPTD: `K / (s^2 + b1 s + b0) e^{-sL}`
/// * NIOPTD-I: `K / (T s^alpha + 1) e^{-sL}`
/// * NIOPTD-II: `K / (s^alpha + b1 s^beta + b0) e^{-sL}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "template", rename_all = "snake_case")]
pub enum ReducedModel {
    Foptd { k: f64, t: f64, delay: f64 },
    Soptd { k: f64, b1: f64, b0: f64, delay: f64 },
    Nioptd1 { k: f64, t: f64, alpha: f64, delay: f64 },
    Nioptd2 { k: f64, alpha: f64, beta: f64, b1: f64, b0: f64, delay: f64 },
}

impl ReducedModel {
    pub fn kind(&self) -> TemplateKind {
        match self {
            Self::Foptd { .. } => TemplateKind::Foptd,
            Self::Soptd { .. } => TemplateKind::Soptd,
            Self::Nioptd1 { .. } => TemplateKind::Nioptd1,
            Self::Nioptd2 { .. } => TemplateKind::Nioptd2,
        }
    }

    pub fn delay(&self) -> f64 {
        match *self {
            Self::Foptd { delay, .. }
            | Self::Soptd { delay, .. }
            | Self::Nioptd1 { delay, .. }
            | Self::Nioptd2 { delay, .. } => delay,
        }
    }

    /// Parameters in declaration order.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Self::Foptd { k, t, delay } => vec![k, t, delay],
            Self::Soptd { k, b1, b0, delay } => vec![k, b1, b0, delay],
            Self::Nioptd1 { k, t, alpha, delay } => vec![k, t, alpha, delay],
            Self::Nioptd2 { k, alpha, beta, b1, b0, delay } => vec![k, alpha, beta, b1, b0, delay],
        }
    }

    pub fn from_params(kind: TemplateKind, p: &[f64]) -> Result<Self> {
        if p.len() != kind.dim() {
            return Err(invalid(format!("{kind} takes {} parameters, got {}", kind.dim(), p.len())));
        }
        let m = match kind {
            TemplateKind::Foptd => Self::Foptd { k: p[0], t: p[1], delay: p[2] },
            TemplateKind::Soptd => Self::Soptd { k: p[0], b1: p[1], b0: p[2], delay: p[3] },
            TemplateKind::Nioptd1 => Self::Nioptd1 { k: p[0], t: p[1], alpha: p[2], delay: p[3] },
            TemplateKind::Nioptd2 => Self::Nioptd2 {
                k: p[0],
                alpha: p[1],
                beta: p[2],
                b1: p[3],
                b0: p[4],
                delay: p[5],
            },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(invalid("template parameters must be finite"));
        }
        let pos = |name: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        if self.delay() < 0.0 {
            return Err(invalid(format!("delay must be >= 0, got {}", self.delay())));
        }
        match *self {
            Self::Foptd { k, t, .. } => {
                pos("K", k)?;
                pos("T", t)
            }
            Self::Soptd { k, b1, b0, .. } => {
                pos("K", k)?;
                pos("b1", b1)?;
                pos("b0", b0)
            }
            Self::Nioptd1 { k, t, alpha, .. } => {
                pos("K", k)?;
                pos("T", t)?;
                pos("alpha", alpha)
            }
            Self::Nioptd2 { k, alpha, beta, b1, b0, .. } => {
                pos("K", k)?;
                pos("b1", b1)?;
                pos("b0", b0)?;
                pos("beta", beta)?;
                if alpha <= beta {
                    return Err(invalid(format!("alpha ({alpha}) must exceed beta ({beta})")));
                }
                Ok(())
            }
        }
    }

    /// Damping ratio `b1 / (2 sqrt(b0))` for the second-order forms.
    pub fn zeta(&self) -> Option<f64> {
        match *self {
            Self::Soptd { b1, b0, .. } | Self::Nioptd2 { b1, b0, .. } => Some(b1 / (2.0 * b0.sqrt())),
            _ => None,
        }
    }

    /// Natural frequency `sqrt(b0)` for the second-order forms.
    pub fn omega_n(&self) -> Option<f64> {
        match *self {
            Self::Soptd { b0, .. } | Self::Nioptd2 { b0, .. } => Some(b0.sqrt()),
            _ => None,
        }
    }

    /// The same model as the richer template that contains it
    /// (FOPTD as NIOPTD-I with alpha = 1, SOPTD as NIOPTD-II with (2, 1)).
    pub fn embed(&self) -> Self {
        match *self {
            Self::Foptd { k, t, delay } => Self::Nioptd1 { k, t, alpha: 1.0, delay },
            Self::Soptd { k, b1, b0, delay } => Self::Nioptd2 {
                k,
                alpha: 2.0,
                beta: 1.0,
                b1,
                b0,
                delay,
            },
            other => other,
        }
    }

    pub fn to_fotf(&self) -> Result<FracTransferFunction> {
        self.validate()?;
        let (k, den) = match *self {
            Self::Foptd { k, t, .. } => (k, vec![term(t, 1.0), term(1.0, 0.0)]),
            Self::Soptd { k, b1, b0, .. } => (k, vec![term(1.0, 2.0), term(b1, 1.0), term(b0, 0.0)]),
            Self::Nioptd1 { k, t, alpha, .. } => (k, vec![term(t, alpha), term(1.0, 0.0)]),
            Self::Nioptd2 { k, alpha, beta, b1, b0, .. } => {
                (k, vec![term(1.0, alpha), term(b1, beta), term(b0, 0.0)])
            }
        };
        FracTransferFunction::new(FracPoly::constant(k)?, FracPoly::new(den)?, self.delay())
    }
}
