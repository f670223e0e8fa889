//! Periodic grids, transforms and the pointwise/multiplier operations the
//! rest of the crate builds on.

pub mod field;
pub mod grid;
pub mod ops;
pub mod snapshot;
pub mod transform;

pub use field::{PhysicalField, SpectralField};
pub use grid::{Grid, GridParams, Mode};
pub use ops::{
    apply_multiplier, apply_real_table, apply_table, dealias, derivative, leray_project,
    nonlinear_bilinear, nonlinear_term, product, recover_pressure,
};
pub use transform::{forward_transform, inverse_transform, lp_norm, spectral_lp_norm};
