//! The mild-solution map as a Picard iteration on a whole interval, an
//! exponential time stepper, and the smallness, blow-up and scaling checks.

pub mod checks;
pub mod config;
pub mod persist;
pub mod picard;
pub mod smallness;
pub mod stepper;

pub use checks::{continuation_functional, continuation_series, scaling_symmetry_check};
pub use config::{PicardMetric, SolverConfig};
pub use persist::{diagnostics_csv, write_solve_dir};
pub use picard::{
    metric_distance, picard_map, picard_solve, picard_solve_with, restart_schedule, PicardReport,
    RestartInterval,
};
pub use smallness::{smallness_check, Smallness};
pub use stepper::{annotate_trace, step_solve, step_solve_with};
