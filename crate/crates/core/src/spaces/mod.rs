//! Norm functionals: Besov, Chemin–Lerner, modulation and exponential
//! modulation, their time-weighted variants, and the Gevrey-class fit.

pub mod gevrey;
pub mod norms;
pub mod spec;
pub mod trace;

pub use gevrey::{gevrey_membership, GevreyFit};
pub use norms::{
    besov_norm, chemin_lerner_norm, cumulative_trace_norm, exp_modulation_log_norm, exp_modulation_norm,
    modulation_norm, snapshot_norm, time_exp_modulation_norm, trace_norm, NormReport, Systems,
    OVERFLOW_GUARD,
};
pub use spec::{Exponent, FreqMetric, NormFamily, NormSpec, WeightKind, WeightSpec};
pub use trace::{time_norm, EvolutionTrace};
