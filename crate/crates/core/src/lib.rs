pub mod analysis;
pub mod error;
pub mod fractional;
pub mod freq;
pub mod numerics;
pub mod reduction;
pub mod reference;
pub mod time;

pub use error::{Error, Result};
