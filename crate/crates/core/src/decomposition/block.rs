use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::transform::lp_norm_coeffs;
use crate::spectral::SpectralField;

/// A frequency cut-off realized on the lattice: the modes it touches and the
/// multiplier value there.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    support: Vec<(usize, f64)>,
}

impl Block {
    pub(crate) fn from_table(table: &[f64]) -> Self {
        let support = table
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| (i, *w))
            .collect();
        Block { support }
    }

    pub(crate) fn from_support(support: Vec<(usize, f64)>) -> Self {
        Block { support }
    }

    pub fn support(&self) -> &[(usize, f64)] {
        &self.support
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Multiplier value at lattice index `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        self.support
            .iter()
            .find(|(i, _)| *i == idx)
            .map(|(_, w)| *w)
            .unwrap_or(0.0)
    }

    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        let mut out = SpectralField::zeros(f.grid(), f.components());
        let len = f.grid().len();
        for c in 0..f.components() {
            for &(idx, w) in &self.support {
                out.coeffs_mut()[c * len + idx] = f.coeff(c, idx) * w;
            }
        }
        out.set_divergence_free_unchecked(f.divergence_free());
        out
    }

    /// `‖block f‖_p`, with per-mode extra factors `scale(idx)` applied first.
    pub fn lp_norm_scaled(
        &self,
        f: &SpectralField,
        p: f64,
        scale: impl Fn(usize) -> f64,
    ) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::param("p", format!("{p} is below 1")));
        }
        let grid = f.grid();
        let comps = f.components();
        if self.support.len() == 1 {
            // a single exponential has constant modulus
            let (idx, w) = self.support[0];
            let amp = (0..comps)
                .map(|c| f.coeff(c, idx).norm_sqr())
                .sum::<f64>()
                .sqrt()
                * (w * scale(idx)).abs();
            return Ok(if p.is_infinite() {
                amp
            } else {
                amp * grid.volume().powf(1.0 / p)
            });
        }
        let len = grid.len();
        let mut bufs = vec![vec![Complex64::new(0.0, 0.0); len]; comps];
        let mut any = false;
        for (c, buf) in bufs.iter_mut().enumerate() {
            for &(idx, w) in &self.support {
                let v = f.coeff(c, idx) * (w * scale(idx));
                any |= v.re != 0.0 || v.im != 0.0;
                buf[idx] = v;
            }
        }
        if !any {
            return Ok(0.0);
        }
        let refs: Vec<&[Complex64]> = bufs.iter().map(|b| b.as_slice()).collect();
        lp_norm_coeffs(grid, &refs, p)
    }

    pub fn lp_norm(&self, f: &SpectralField, p: f64) -> Result<f64> {
        self.lp_norm_scaled(f, p, |_| 1.0)
    }
}
