mod controller;
mod tuner;

pub use controller::{controller_response_analytic, fopid_to_fotf, ControllerResponse, FopidParams};
pub use tuner::{
    check_caps, default_seed, spec_residuals, tune_frequency_domain, CapCheck, CapMode, DoglegOptionsSer, FreqSpec,
    FreqTuneOptions, TuningResult, RESIDUAL_TOL, SINGULAR_RESIDUAL,
};
