use num_complex::Complex64;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Relative tolerance for the conjugate-symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative tolerance for the divergence-free assertion.
pub const DIVERGENCE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fourier coefficients of a real scalar or vector field, component-major,
/// each component in the grid's row-major FFT order.
///
/// Normalisation: `f(x) = Σ_ξ f̂(ξ) e^{iξ·x}`, so a constant `c` has `f̂(0) = c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    components: usize,
    coeffs: Vec<Complex64>,
    divergence_free: bool,
}

/// Collocation samples of a real scalar or vector field, component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: Grid,
    components: usize,
    data: Vec<f64>,
}

fn check_components(grid: &Grid, components: usize) -> Result<()> {
    if components == 1 || components == grid.n_dims() {
        Ok(())
    } else {
        Err(Error::param(
            "components",
            format!("{components} is neither 1 nor {}", grid.n_dims()),
        ))
    }
}

impl SpectralField {
    pub fn zeros(grid: &Grid, components: usize) -> Self {
        assert!(components == 1 || components == grid.n_dims());
        SpectralField {
            grid: grid.clone(),
            components,
            coeffs: vec![ZERO; components * grid.len()],
            divergence_free: components > 1,
        }
    }

    pub fn from_coeffs(grid: &Grid, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        check_components(grid, components)?;
        if coeffs.len() != components * grid.len() {
            return Err(Error::RejectedInput(format!(
                "expected {} coefficients, got {}",
                components * grid.len(),
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::RejectedInput("non-finite coefficient".into()));
        }
        Ok(SpectralField {
            grid: grid.clone(),
            components,
            coeffs,
            divergence_free: false,
        })
    }

    /// Builds a field from a coefficient function of the integer wavevector.
    /// Nyquist modes are left at zero.
    pub fn from_fn(
        grid: &Grid,
        components: usize,
        mut f: impl FnMut(usize, &[i64]) -> Complex64,
    ) -> Result<Self> {
        check_components(grid, components)?;
        let mut out = SpectralField::zeros(grid, components);
        out.divergence_free = false;
        let n = grid.n_dims();
        for c in 0..components {
            for idx in 0..grid.len() {
                let m = grid.mode(idx);
                if m.is_nyquist() {
                    continue;
                }
                out.coeffs[c * grid.len() + idx] = f(c, &m.k[..n]);
            }
        }
        if out.coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::RejectedInput("non-finite coefficient".into()));
        }
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_vector(&self) -> bool {
        self.components > 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    pub fn coeff(&self, c: usize, idx: usize) -> Complex64 {
        self.coeffs[c * self.grid.len() + idx]
    }

    /// Coefficient at integer wavevector `k`, zero when off the lattice.
    pub fn coeff_at(&self, c: usize, k: &[i64]) -> Complex64 {
        match self.grid.index_of(k) {
            Some(idx) => self.coeff(c, idx),
            None => ZERO,
        }
    }

    pub fn set_coeff_at(&mut self, c: usize, k: &[i64], v: Complex64) -> Result<()> {
        let idx = self.grid.index_of(k).ok_or_else(|| Error::Index {
            index: format!("{k:?}"),
            range: format!("|k_i| <= {}", self.grid.resolution() / 2),
        })?;
        let len = self.grid.len();
        self.coeffs[c * len + idx] = v;
        Ok(())
    }

    pub fn divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Asserts the divergence-free flag after checking it.
    pub fn mark_divergence_free(&mut self) -> Result<()> {
        let d = self.divergence_defect();
        if d > DIVERGENCE_TOL {
            return Err(Error::CorruptedField(format!(
                "divergence defect {d:.3e} exceeds {DIVERGENCE_TOL:e}"
            )));
        }
        self.divergence_free = true;
        Ok(())
    }

    pub(crate) fn set_divergence_free_unchecked(&mut self, flag: bool) {
        self.divergence_free = flag && self.components > 1;
    }

    /// Largest `|Σ ξ_i û_i(ξ)| / (|ξ| ‖û(ξ)‖)` over nonzero modes (0 for scalars).
    pub fn divergence_defect(&self) -> f64 {
        if self.components == 1 {
            return 0.0;
        }
        let n = self.grid.n_dims();
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.len() {
            let m = self.grid.mode(idx);
            if m.is_zero() {
                continue;
            }
            let mut amp2 = 0.0;
            for c in 0..n {
                amp2 += self.coeff(c, idx).norm_sqr();
            }
            if amp2 == 0.0 {
                continue;
            }
            let mut worst_rep: f64 = 0.0;
            self.grid.for_each_representative(idx, |xi| {
                let mut div = ZERO;
                let mut xi2 = 0.0;
                for c in 0..n {
                    div += self.coeff(c, idx) * xi[c];
                    xi2 += xi[c] * xi[c];
                }
                worst_rep = worst_rep.max(div.norm() / (xi2.sqrt() * amp2.sqrt()));
            });
            worst = worst.max(worst_rep);
        }
        worst
    }

    /// `max |f̂(-ξ) - conj f̂(ξ)| / max |f̂|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let len = self.grid.len();
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            let comp = &self.coeffs[c * len..(c + 1) * len];
            for (idx, v) in comp.iter().enumerate() {
                let w = comp[self.grid.neg_index(idx)];
                worst = worst.max((w - v.conj()).norm());
            }
        }
        worst / scale
    }

    pub fn check_hermitian(&self) -> Result<()> {
        let d = self.hermitian_defect();
        if d > HERMITIAN_TOL {
            Err(Error::CorruptedField(format!(
                "conjugate symmetry violated by {d:.3e} (tolerance {HERMITIAN_TOL:e})"
            )))
        } else {
            Ok(())
        }
    }

    /// Replaces each coefficient pair by its conjugate-symmetric part.
    pub fn symmetrize(&mut self) {
        let len = self.grid.len();
        for c in 0..self.components {
            let comp = &mut self.coeffs[c * len..(c + 1) * len];
            for idx in 0..len {
                let j = self.grid.neg_index(idx);
                if j < idx {
                    continue;
                }
                let avg = (comp[idx] + comp[j].conj()) * 0.5;
                comp[idx] = avg;
                comp[j] = avg.conj();
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.norm()))
    }

    /// Mean (zero-mode coefficient) of component `c`.
    pub fn mean(&self, c: usize) -> f64 {
        self.coeff(c, 0).re
    }

    pub fn zero_mean(&mut self) {
        let len = self.grid.len();
        for c in 0..self.components {
            self.coeffs[c * len] = ZERO;
        }
    }

    pub fn zero_nyquist(&mut self) {
        let len = self.grid.len();
        for idx in 0..len {
            if self.grid.mode(idx).is_nyquist() {
                for c in 0..self.components {
                    self.coeffs[c * len + idx] = ZERO;
                }
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= a);
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::RejectedInput(
                "fields live on different grids or have different component counts".into(),
            ));
        }
        Ok(())
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (x, y) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
        out.divergence_free = self.divergence_free && other.divergence_free;
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `Σ_ξ |f̂(ξ)|²` summed over components.
    pub fn coeff_energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// L² norm via Parseval.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.volume() * self.coeff_energy()).sqrt()
    }

    /// Real L² inner product via Parseval.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let s: f64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        Ok(self.grid.volume() * s)
    }

    /// Coefficients of `x ↦ f(λx)` for a positive integer `λ`: mode `k` moves
    /// to `λk`. Fails if any nonzero mode would leave the lattice.
    pub fn dilate(&self, lambda: i64) -> Result<Self> {
        if lambda < 1 {
            return Err(Error::param("lambda", format!("{lambda} is not a positive integer")));
        }
        let mut out = SpectralField::zeros(&self.grid, self.components);
        let n = self.grid.n_dims();
        let half = (self.grid.resolution() / 2) as i64;
        for idx in 0..self.grid.len() {
            let m = self.grid.mode(idx);
            let nonzero = (0..self.components).any(|c| self.coeff(c, idx) != ZERO);
            if !nonzero {
                continue;
            }
            let target: Vec<i64> = m.k[..n].iter().map(|k| k * lambda).collect();
            if m.is_nyquist() || target.iter().any(|k| k.abs() >= half) {
                return Err(Error::param(
                    "lambda",
                    format!("dilating mode {:?} by {lambda} leaves the lattice", &m.k[..n]),
                ));
            }
            let t = self.grid.index_of(&target).expect("checked range");
            for c in 0..self.components {
                out.coeffs[c * self.grid.len() + t] = self.coeff(c, idx);
            }
        }
        out.divergence_free = self.divergence_free;
        Ok(out)
    }

    /// Largest `|k|_∞` carrying a nonzero coefficient.
    pub fn max_active_wavenumber(&self) -> i64 {
        let n = self.grid.n_dims();
        let mut best = 0;
        for idx in 0..self.grid.len() {
            if (0..self.components).any(|c| self.coeff(c, idx) != ZERO) {
                let m = self.grid.mode(idx);
                best = best.max(m.k[..n].iter().map(|k| k.abs()).max().unwrap_or(0));
            }
        }
        best
    }
}

impl PhysicalField {
    pub fn from_samples(grid: &Grid, components: usize, data: Vec<f64>) -> Result<Self> {
        check_components(grid, components)?;
        if data.len() != components * grid.len() {
            return Err(Error::RejectedInput(format!(
                "expected {} samples, got {}",
                components * grid.len(),
                data.len()
            )));
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            components,
            data,
        })
    }

    /// Samples `f(component, x)` on the collocation points.
    pub fn from_fn(grid: &Grid, components: usize, f: impl Fn(usize, &[f64]) -> f64) -> Result<Self> {
        check_components(grid, components)?;
        let n = grid.n_dims();
        let mut data = Vec::with_capacity(components * grid.len());
        for c in 0..components {
            for idx in 0..grid.len() {
                let x = grid.point(idx);
                data.push(f(c, &x[..n]));
            }
        }
        Ok(PhysicalField {
            grid: grid.clone(),
            components,
            data,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let len = self.grid.len();
        &self.data[c * len..(c + 1) * len]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Pointwise Euclidean magnitude across components.
    pub fn magnitude(&self) -> Vec<f64> {
        let len = self.grid.len();
        (0..len)
            .map(|i| {
                (0..self.components)
                    .map(|c| self.data[c * len + i].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}
