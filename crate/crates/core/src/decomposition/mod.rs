//! Littlewood–Paley shells, frequency-uniform blocks and the paraproduct.

mod block;
pub mod dyadic;
pub mod paraproduct;
pub mod profile;
pub mod uniform;

use std::fmt::Write as _;

pub use block::Block;
pub use dyadic::{build_dyadic, dyadic_block, low_freq_project, DyadicSystem};
pub use paraproduct::{paraproduct_split, Paraproduct};
pub use profile::Transition;
pub use uniform::{build_uniform, uniform_block, UniformSystem};

use crate::error::Result;
use crate::spectral::SpectralField;

/// `(j, [‖Δ_j f‖_p for p in ps])` for every active shell.
pub fn dyadic_energy_table(
    f: &SpectralField,
    sys: &DyadicSystem,
    ps: &[f64],
) -> Result<Vec<(i32, Vec<f64>)>> {
    sys.blocks()
        .map(|(j, b)| Ok((j, ps.iter().map(|&p| b.lp_norm(f, p)).collect::<Result<_>>()?)))
        .collect()
}

/// CSV with columns `index, p=<p>...`.
pub fn energy_table_csv(rows: &[(String, Vec<f64>)], ps: &[f64]) -> String {
    let mut out = String::from("index");
    for p in ps {
        if p.is_infinite() {
            out.push_str(",p=inf");
        } else {
            let _ = write!(out, ",p={p}");
        }
    }
    out.push('\n');
    for (label, vals) in rows {
        out.push_str(label);
        for v in vals {
            let _ = write!(out, ",{v:.16e}");
        }
        out.push('\n');
    }
    out
}
