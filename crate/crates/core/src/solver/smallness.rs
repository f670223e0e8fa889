use serde::Serialize;

use super::config::SolverConfig;
use crate::error::Result;
use crate::spaces::{snapshot_norm, Systems};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smallness {
    pub norm: f64,
    /// `δ/(4 C_emp)`; 0 without a calibrated constant, so only the zero
    /// datum passes.
    pub threshold: f64,
    pub pass: bool,
}

/// Compares the critical data norm with `δ/(4 C_emp)`.
pub fn smallness_check(u0: &SpectralField, cfg: &SolverConfig, sys: &Systems) -> Result<Smallness> {
    let spec = cfg.smallness_norm(u0.grid().n_dims());
    let norm = snapshot_norm(u0, 0.0, &spec, sys)?;
    let threshold = match cfg.calibration_constant {
        Some(c) => cfg.delta_for(c) / (4.0 * c),
        None => 0.0,
    };
    Ok(Smallness {
        norm,
        threshold,
        pass: norm <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    #[test]
    fn zero_passes_and_norm_is_homogeneous() {
        let g = Grid::new(2, 16).unwrap();
        let sys = Systems::new(&g);
        let cfg = SolverConfig::default();
        let z = SpectralField::zeros(&g, 2);
        assert!(smallness_check(&z, &cfg, &sys).unwrap().pass);

        let mut u = SpectralField::zeros(&g, 2);
        u.set_coeff_at(0, &[0, 2], Complex64::new(0.5, 0.0)).unwrap();
        u.set_coeff_at(0, &[0, -2], Complex64::new(0.5, 0.0)).unwrap();
        let a = smallness_check(&u, &cfg, &sys).unwrap();
        let b = smallness_check(&u.scaled(3.0), &cfg, &sys).unwrap();
        assert!((b.norm - 3.0 * a.norm).abs() < 1e-12 * b.norm);
        assert!(!a.pass);
        let cal = SolverConfig {
            calibration_constant: Some(0.5),
            ..Default::default()
        };
        let c = smallness_check(&u.scaled(1e-3), &cal, &sys).unwrap();
        assert_eq!(c.threshold, 0.25);
        assert!(c.pass);
    }
}
