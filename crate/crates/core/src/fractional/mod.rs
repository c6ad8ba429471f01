//! Fractional-order transfer functions with dead time.

mod fotf;
mod oustaloup;
mod pade;
mod plant_file;
mod poly;
mod rational;
mod statespace;

pub use fotf::{term, FracTransferFunction};
pub use oustaloup::{oustaloup, split_order, OustaloupConfig, OustaloupFilter};
pub use pade::pade_delay;
pub use plant_file::{bundled_plant, load_plant, parse_plant, PlantFile, BUNDLED_PLANTS};
pub use poly::{jw_pow, FracPoly, FracTerm};
pub use rational::{
    is_stable, poly_add, poly_eval, poly_mul, rationalize, rationalize_poly, rationalize_with_cap, RationalTf,
    DEFAULT_DEGREE_CAP, STABILITY_MARGIN,
};
pub use statespace::{oustaloup_ss, pade_ss, rational_ss, realize_fotf, StateSpace};
pub(crate) use statespace::power_chain;
