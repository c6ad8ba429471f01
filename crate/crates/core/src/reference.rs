//! Expected values for the bundled plants, used by the acceptance checks and
//! the `reproduce` command.

use crate::error::{Error, Result};
use crate::freq::{FopidParams, FreqSpec};
use crate::reduction::{ReducedModel, TemplateKind};
use crate::time::IndexKind;
use serde::{Deserialize, Serialize};

pub const REFERENCE_TOML: &str = include_str!("../data/reference.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRef {
    pub plant: String,
    pub provenance: String,
    pub foptd: f64,
    pub soptd: f64,
    pub nioptd1: f64,
    pub nioptd2: f64,
}

impl ReductionRef {
    pub fn j_f(&self, kind: TemplateKind) -> f64 {
        match kind {
            TemplateKind::Foptd => self.foptd,
            TemplateKind::Soptd => self.soptd,
            TemplateKind::Nioptd1 => self.nioptd1,
            TemplateKind::Nioptd2 => self.nioptd2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRef {
    pub plant: String,
    pub provenance: String,
    pub foptd: ReducedModel,
    pub soptd: ReducedModel,
    pub nioptd1: ReducedModel,
    pub nioptd2: ReducedModel,
}

impl ModelRef {
    pub fn model(&self, kind: TemplateKind) -> &ReducedModel {
        match kind {
            TemplateKind::Foptd => &self.foptd,
            TemplateKind::Soptd => &self.soptd,
            TemplateKind::Nioptd1 => &self.nioptd1,
            TemplateKind::Nioptd2 => &self.nioptd2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqDesignRef {
    pub plant: String,
    pub provenance: String,
    pub spec: FreqSpec,
    pub controller: FopidParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRowRef {
    pub index: IndexKind,
    pub j_min: f64,
    pub controller: FopidParams,
    pub mp_pct: f64,
    pub t_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDesignRef {
    pub plant: String,
    pub provenance: String,
    pub rows: Vec<TimeRowRef>,
}

impl TimeDesignRef {
    pub fn row(&self, index: IndexKind) -> Option<&TimeRowRef> {
        self.rows.iter().find(|r| r.index == index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceData {
    pub reduction: Vec<ReductionRef>,
    pub model: Vec<ModelRef>,
    pub freq_design: Vec<FreqDesignRef>,
    pub time_design: Vec<TimeDesignRef>,
}

fn find<'a, T>(items: &'a [T], plant: &str, name: impl Fn(&T) -> &str) -> Result<&'a T> {
    items
        .iter()
        .find(|x| name(x).eq_ignore_ascii_case(plant))
        .ok_or_else(|| Error::InvalidInput(format!("no reference entry for plant '{plant}'")))
}

impl ReferenceData {
    pub fn bundled() -> Result<Self> {
        toml::from_str(REFERENCE_TOML).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn plants(&self) -> Vec<String> {
        self.reduction.iter().map(|r| r.plant.clone()).collect()
    }

    pub fn reduction_for(&self, plant: &str) -> Result<&ReductionRef> {
        find(&self.reduction, plant, |r| &r.plant)
    }

    pub fn models_for(&self, plant: &str) -> Result<&ModelRef> {
        find(&self.model, plant, |r| &r.plant)
    }

    pub fn freq_design_for(&self, plant: &str) -> Result<&FreqDesignRef> {
        find(&self.freq_design, plant, |r| &r.plant)
    }

    pub fn time_design_for(&self, plant: &str) -> Result<&TimeDesignRef> {
        find(&self.time_design, plant, |r| &r.plant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_reference_parses_and_is_complete() {
        let r = ReferenceData::bundled().unwrap();
        assert_eq!(r.plants(), ["p1", "p2", "p3", "p4"]);
        for p in r.plants() {
            let red = r.reduction_for(&p).unwrap();
            let models = r.models_for(&p).unwrap();
            for k in TemplateKind::ALL {
                assert!(red.j_f(k) > 0.0);
                assert_eq!(models.model(k).kind(), k);
                models.model(k).validate().unwrap();
            }
            r.freq_design_for(&p).unwrap().controller.validate().unwrap();
            let t = r.time_design_for(&p).unwrap();
            for k in IndexKind::ALL {
                t.row(k).unwrap().controller.validate().unwrap();
            }
        }
        assert!(r.reduction_for("p9").is_err());
    }
}
