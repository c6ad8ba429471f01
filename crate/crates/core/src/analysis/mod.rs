mod curves;
mod export;
mod metrics;
mod sweep;

pub use curves::{bode_curve, log_grid, sensitivity_curves, FrequencyCurve};
pub use export::{read_bode_csv, read_step_csv, write_bode_csv, write_step_csv, write_sweep_csv};
pub use metrics::{step_metrics, StepMetrics, SETTLING_BAND};
pub use sweep::{iso_damping_sweep, GainSweepReport, SweepEntry, DEFAULT_SWEEP_GAINS};
