//! Reduction of high-order plants onto FOPTD / SOPTD / NIOPTD-I / NIOPTD-II templates.

mod fit;
mod h2;
mod model;

pub use fit::{fit_template, rank_templates, step_seed, FitOptions, FitResult, StepSeed};
pub use h2::{h2_distance, h2_grid, h2_mismatch, h2_norm, H2Value, H2_GRID_POINTS};
pub use model::{ReducedModel, TemplateKind};
