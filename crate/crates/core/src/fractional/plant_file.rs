use super::fotf::FracTransferFunction;
use super::poly::{FracPoly, FracTerm};
use super::rational::poly_mul;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Plant definition file (TOML).
///
/// ```toml
/// name = "P2"
/// form = "factored"          # or "terms"
/// gain = 9.0
/// delay = 0.0
/// denominator_factors = [[1.0, 1.0], [1.0, 2.0, 9.0]]
/// ```
///
/// The `terms` form lists raw `{ coeff, exponent }` entries under `num` and `den`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(flatten)]
    pub spec: PlantSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PlantSpec {
    Factored {
        gain: f64,
        #[serde(default)]
        delay: f64,
        #[serde(default)]
        numerator_factors: Vec<Vec<f64>>,
        denominator_factors: Vec<Vec<f64>>,
    },
    Terms {
        num: Vec<FracTerm>,
        den: Vec<FracTerm>,
        #[serde(default)]
        delay: f64,
    },
}

impl PlantFile {
    pub fn to_fotf(&self) -> Result<FracTransferFunction> {
        match &self.spec {
            PlantSpec::Factored {
                gain,
                delay,
                numerator_factors,
                denominator_factors,
            } => {
                let expand = |factors: &[Vec<f64>]| -> Result<Vec<f64>> {
                    let mut acc = vec![1.0];
                    for f in factors {
                        if f.is_empty() || f.len() > 3 {
                            return Err(invalid(format!(
                                "factor {f:?} must be first or second order (2 or 3 coefficients)"
                            )));
                        }
                        acc = poly_mul(&acc, f);
                    }
                    Ok(acc)
                };
                let num: Vec<f64> = expand(numerator_factors)?.iter().map(|c| c * gain).collect();
                let den = expand(denominator_factors)?;
                FracTransferFunction::from_coeffs(&num, &den, *delay)
            }
            PlantSpec::Terms { num, den, delay } => {
                FracTransferFunction::new(FracPoly::new(num.clone())?, FracPoly::new(den.clone())?, *delay)
            }
        }
    }
}

pub fn parse_plant(text: &str) -> Result<PlantFile> {
    let pf: PlantFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    pf.to_fotf()?;
    Ok(pf)
}

pub fn load_plant(path: &Path) -> Result<PlantFile> {
    let text = std::fs::read_to_string(path)?;
    parse_plant(&text)
}

/// Definition files of the four benchmark plants.
pub const BUNDLED_PLANTS: [(&str, &str); 4] = [
    ("P1", include_str!("../../data/plants/p1.toml")),
    ("P2", include_str!("../../data/plants/p2.toml")),
    ("P3", include_str!("../../data/plants/p3.toml")),
    ("P4", include_str!("../../data/plants/p4.toml")),
];

/// Bundled plant by name (case-insensitive `P1`..`P4`).
pub fn bundled_plant(name: &str) -> Result<FracTransferFunction> {
    let (_, text) = BUNDLED_PLANTS
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .ok_or_else(|| invalid(format!("no bundled plant named {name}")))?;
    parse_plant(text)?.to_fotf()
}
