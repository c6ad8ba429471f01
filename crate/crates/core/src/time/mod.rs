mod closed_loop;
mod index;
mod tuner;

pub use closed_loop::{
    closed_loop_realize, simulate, simulate_step, ClosedLoop, DiscreteLoop, Disturbance, SimConfig, SimResult,
    OVERFLOW_LIMIT,
};
pub use index::{all_indices, performance_index, IndexKind, IndexWeights};
pub use tuner::{
    candidate_objective, default_bounds, recheck_stability, tune_all_indices, tune_time_domain, TimeTuneOptions,
    TimeTuneResult, RECHECK_ORDER, UNSTABLE_PENALTY,
};
