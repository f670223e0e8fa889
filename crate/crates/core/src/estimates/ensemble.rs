use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decomposition::DyadicSystem;
use crate::error::{Error, Result};
use crate::spectral::ops::leray_project;
use crate::spectral::{Grid, SpectralField};

/// Spectral amplitude law of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldLaw {
    /// Gaussian coefficients with amplitude `(1+|k|)^{−decay}`.
    GaussianSpectrum { decay: f64 },
    /// A smooth positive profile on dyadic shell `index`, all phases aligned
    /// (the data that saturate shell estimates).
    BlockSupported { index: i32 },
    /// Gaussian coefficients with amplitude `e^{−rate|k|}`.
    Analytic { rate: f64 },
}

fn default_resolutions() -> Vec<usize> {
    vec![32, 64]
}

fn default_dims() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n_samples: usize,
    pub field_law: FieldLaw,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    pub seed: u64,
    #[serde(default = "default_dims")]
    pub n_dims: usize,
}

impl EnsembleSpec {
    pub fn new(n_samples: usize, field_law: FieldLaw, seed: u64) -> Self {
        EnsembleSpec {
            n_samples,
            field_law,
            resolutions: default_resolutions(),
            seed,
            n_dims: default_dims(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::validation(
                "ensemble.n_samples",
                format!("{} is below the minimum of 10", self.n_samples),
            ));
        }
        if !(2..=3).contains(&self.n_dims) {
            return Err(Error::validation("ensemble.n_dims", format!("{} is not 2 or 3", self.n_dims)));
        }
        if self.resolutions.is_empty() {
            return Err(Error::validation("ensemble.resolutions", "empty list"));
        }
        for &n in &self.resolutions {
            if n < 16 || n % 4 != 0 {
                return Err(Error::validation(
                    "ensemble.resolutions",
                    format!("{n} is not a multiple of 4 that is at least 16"),
                ));
            }
        }
        match self.field_law {
            FieldLaw::GaussianSpectrum { decay } if !(decay.is_finite() && decay >= 0.0) => Err(
                Error::validation("ensemble.field_law.decay", format!("{decay} is not finite and >= 0")),
            ),
            FieldLaw::Analytic { rate } if !(rate.is_finite() && rate > 0.0) => Err(Error::validation(
                "ensemble.field_law.rate",
                format!("{rate} is not positive"),
            )),
            FieldLaw::BlockSupported { index } if index < 0 => Err(Error::validation(
                "ensemble.field_law.index",
                format!("{index} is negative"),
            )),
            FieldLaw::BlockSupported { index } => {
                // the shell must sit inside the product band of the coarsest grid
                let coarse = *self.resolutions.iter().min().expect("nonempty");
                if index > 20 || 2i64 << index > (coarse / 4) as i64 {
                    return Err(Error::validation(
                        "ensemble.field_law.index",
                        format!("shell {index} reaches |ξ| = 2^{} beyond N/4 at N = {coarse}", index + 1),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Frequency box of generated samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    /// `|k|_∞ < N/2`: everything but the Nyquist planes.
    Full,
    /// `|k|_∞ < N/4`: products of two such fields are exact on the grid.
    Product,
}

impl Band {
    pub fn limit(self, grid: &Grid) -> i64 {
        let n = grid.resolution() as i64;
        match self {
            Band::Full => n / 2 - 1,
            Band::Product => n / 4 - 1,
        }
    }
}

/// A generator whose draw at wavevector `k` depends only on
/// `(seed, sample, role, component, k)`, so the same sample is the same
/// function on every grid that contains its modes.
pub(crate) fn mode_rng(seed: u64, sample: usize, role: u8, comp: usize, k: &[i64]) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&(sample as u32).to_le_bytes());
    key[12] = role;
    key[13] = comp as u8;
    for (i, v) in k.iter().enumerate() {
        let at = 16 + 4 * i;
        key[at..at + 4].copy_from_slice(&(*v as i32).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Key used for per-sample (not per-mode) draws.
const SAMPLE_KEY: [i64; 3] = [i32::MAX as i64, i32::MAX as i64, i32::MAX as i64];

pub(crate) fn sample_rng(seed: u64, sample: usize, role: u8) -> ChaCha8Rng {
    mode_rng(seed, sample, role, 255, &SAMPLE_KEY)
}

/// Whether `k` is the representative of `{k, −k}` (first nonzero entry positive).
fn canonical(k: &[i64]) -> bool {
    k.iter().find(|v| **v != 0).is_some_and(|v| *v > 0)
}

fn euclid(k: &[i64]) -> f64 {
    k.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt()
}

/// Draws ensemble members on one grid.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    spec: &'a EnsembleSpec,
    grid: &'a Grid,
}

impl<'a> Sampler<'a> {
    pub fn new(spec: &'a EnsembleSpec, grid: &'a Grid) -> Self {
        Sampler { spec, grid }
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    fn amplitude(&self, k: &[i64]) -> f64 {
        match self.spec.field_law {
            FieldLaw::GaussianSpectrum { decay } => (1.0 + euclid(k)).powf(-decay),
            FieldLaw::Analytic { rate } => (-rate * euclid(k)).exp(),
            FieldLaw::BlockSupported { .. } => 1.0,
        }
    }

    /// Hermitian Gaussian field with amplitude `amp(k)` inside the band.
    fn incoherent(
        &self,
        sample: usize,
        role: u8,
        comps: usize,
        band: Band,
        amp: impl Fn(&[i64]) -> f64,
    ) -> Result<SpectralField> {
        let lim = band.limit(self.grid);
        let seed = self.spec.seed;
        SpectralField::from_fn(self.grid, comps, |c, k| {
            if k.iter().all(|v| *v == 0) || k.iter().any(|v| v.abs() > lim) {
                return Complex64::new(0.0, 0.0);
            }
            let a = amp(k);
            if a == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let (rep, conj) = if canonical(k) {
                (k.to_vec(), false)
            } else {
                (k.iter().map(|v| -v).collect(), true)
            };
            let mut rng = mode_rng(seed, sample, role, c, &rep);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im) * (a / std::f64::consts::SQRT_2);
            if conj {
                z.conj()
            } else {
                z
            }
        })
    }

    /// Real positive coefficients `A(1 + ½cos(lθ_k + φ))`, `θ_k` the polar
    /// angle of `(k₁, k₂)`, with `A`, even `l` and `φ` drawn per sample. The
    /// profile is smooth and the same on every shell, so all modes peak
    /// together at the origin, a grid point on every resolution.
    fn coherent(&self, sample: usize, role: u8, comps: usize, band: Band) -> Result<SpectralField> {
        let lim = band.limit(self.grid);
        let mut rng = sample_rng(self.spec.seed, sample, role);
        let amp: f64 = rng.random_range(0.5..1.5);
        let l = 2.0 * rng.random_range(0..3) as f64;
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        SpectralField::from_fn(self.grid, comps, |_, k| {
            if k.iter().all(|v| *v == 0) || k.iter().any(|v| v.abs() > lim) {
                return Complex64::new(0.0, 0.0);
            }
            let theta = (k[1] as f64).atan2(k[0] as f64);
            Complex64::new(amp * (1.0 + 0.5 * (l * theta + phase).cos()), 0.0)
        })
    }

    /// Member `sample` of the ensemble. Block-supported laws live on
    /// shell `index` of `dyadic`.
    pub fn sample(
        &self,
        sample: usize,
        role: u8,
        comps: usize,
        band: Band,
        dyadic: &DyadicSystem,
    ) -> Result<SpectralField> {
        match self.spec.field_law {
            FieldLaw::BlockSupported { index } => self.shell_sample(sample, role, comps, band, index, dyadic),
            _ => self.incoherent(sample, role, comps, band, |k| self.amplitude(k)),
        }
    }

    /// The law restricted to shell `j`: `φ_j` times the law's field (the
    /// coherent field for block-supported laws).
    pub fn shell_sample(
        &self,
        sample: usize,
        role: u8,
        comps: usize,
        band: Band,
        j: i32,
        dyadic: &DyadicSystem,
    ) -> Result<SpectralField> {
        let block = dyadic.block(j).map_err(|_| {
            Error::validation(
                "ensemble.field_law.index",
                format!("shell {j} is outside [{}, {}]", dyadic.j_min(), dyadic.j_max()),
            )
        })?;
        let base = match self.spec.field_law {
            FieldLaw::BlockSupported { .. } => self.coherent(sample, role, comps, band)?,
            _ => self.incoherent(sample, role, comps, band, |k| self.amplitude(k))?,
        };
        Ok(block.apply(&base))
    }

    /// Gaussian field with amplitude `e^{−rate|k|}`, whatever the law.
    pub fn analytic_sample(&self, sample: usize, role: u8, rate: f64, band: Band) -> Result<SpectralField> {
        self.incoherent(sample, role, 1, band, |k| (-rate * euclid(k)).exp())
    }
}

/// Divergence-free, zero-mean Gaussian vector field with amplitude
/// `(1+|k|)^{−decay}`, scaled to `‖u‖₂ = 1`.
pub fn random_div_free(grid: &Grid, decay: f64, seed: u64) -> Result<SpectralField> {
    let spec = EnsembleSpec {
        n_samples: 10,
        field_law: FieldLaw::GaussianSpectrum { decay },
        resolutions: vec![grid.resolution()],
        seed,
        n_dims: grid.n_dims(),
    };
    let s = Sampler::new(&spec, grid);
    let raw = s.incoherent(0, 0, grid.n_dims(), Band::Full, |k| s.amplitude(k))?;
    let mut u = leray_project(&raw)?;
    u.zero_mean();
    let norm = u.l2_norm();
    if norm == 0.0 {
        return Err(Error::RejectedInput("random field vanished after projection".into()));
    }
    let mut u = u.scaled(1.0 / norm);
    u.mark_divergence_free()?;
    Ok(u)
}

fn band_of(f: &SpectralField) -> i64 {
    f.max_active_wavenumber()
}

/// `e^{L(ξ)} Σ_η f̂(η)e^{−L(η)} ĝ(ξ−η)e^{−L(ξ−η)}` by direct convolution.
///
/// With `L = w|ξ|₁` this is the form `e^{wΛ}(e^{−wΛ}f · e^{−wΛ}g)`; with
/// `L ≡ 0` it is the exact product. When `L` is subadditive every term keeps
/// its own scale, so nothing is amplified by the outer weight. Both inputs
/// must be scalar and live in `|k|_∞ < N/4`.
pub fn weighted_convolution(f: &SpectralField, g: &SpectralField, log_weight: Option<&[f64]>) -> Result<SpectralField> {
    if f.components() != 1 || g.components() != 1 || f.grid() != g.grid() {
        return Err(Error::RejectedInput("convolution expects two scalar fields on one grid".into()));
    }
    let grid = f.grid();
    let lim = Band::Product.limit(grid);
    if band_of(f) > lim || band_of(g) > lim {
        return Err(Error::RejectedInput(format!(
            "factors must satisfy |k|_inf <= {lim} for an exact product"
        )));
    }
    let n = grid.n_dims();
    let side = (4 * lim + 1) as usize;
    let mut strides = vec![1isize; n];
    for d in (0..n.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * side as isize;
    }
    let len = grid.len();
    let lw = |idx: usize| log_weight.map_or(0.0, |l| l[idx]);
    let collect = |h: &SpectralField, shift: i64| -> Vec<(isize, Complex64)> {
        (0..len)
            .filter_map(|idx| {
                let v = h.coeff(0, idx);
                if v.re == 0.0 && v.im == 0.0 {
                    return None;
                }
                let m = grid.mode(idx);
                let off: isize = (0..n).map(|d| (m.k[d] + shift) as isize * strides[d]).sum();
                Some((off, v * (-lw(idx)).exp()))
            })
            .collect()
    };
    let fa = collect(f, 0);
    let gb = collect(g, 2 * lim);
    let mut acc = vec![Complex64::new(0.0, 0.0); side.pow(n as u32)];
    for &(oa, va) in &fa {
        for &(ob, vb) in &gb {
            acc[(oa + ob) as usize] += va * vb;
        }
    }
    let mut out = SpectralField::zeros(grid, 1);
    let mut k = vec![0i64; n];
    for (pos, v) in acc.into_iter().enumerate() {
        if v.re == 0.0 && v.im == 0.0 {
            continue;
        }
        let mut rem = pos;
        for d in (0..n).rev() {
            k[d] = (rem % side) as i64 - 2 * lim;
            rem /= side;
        }
        let idx = grid.index_of(&k).expect("product support lies inside the grid");
        out.coeffs_mut()[idx] = v * lw(idx).exp();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::build_dyadic;
    use crate::spaces::norms::l1_symbol;
    use crate::spectral::{forward_transform, inverse_transform, PhysicalField};

    fn spec(law: FieldLaw) -> EnsembleSpec {
        EnsembleSpec::new(10, law, 7)
    }

    #[test]
    fn samples_are_hermitian_deterministic_and_resolution_consistent() {
        let s = spec(FieldLaw::GaussianSpectrum { decay: 1.0 });
        let g32 = Grid::new(2, 32).unwrap();
        let g64 = Grid::new(2, 64).unwrap();
        let d32 = build_dyadic(&g32, 0);
        let a = Sampler::new(&s, &g32).sample(3, 0, 1, Band::Product, &d32).unwrap();
        let b = Sampler::new(&s, &g32).sample(3, 0, 1, Band::Product, &d32).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        assert!(a.hermitian_defect() == 0.0);
        assert_eq!(a.mean(0), 0.0);
        assert!(a.max_active_wavenumber() <= 7);
        let c = Sampler::new(&s, &g64).sample(3, 0, 1, Band::Full, &build_dyadic(&g64, 0)).unwrap();
        assert_eq!(a.coeff_at(0, &[3, -5]), c.coeff_at(0, &[3, -5]));
        let other = Sampler::new(&s, &g32).sample(4, 0, 1, Band::Product, &d32).unwrap();
        assert_ne!(a.coeffs(), other.coeffs());
    }

    #[test]
    fn coherent_shell_peaks_at_its_centre() {
        let s = spec(FieldLaw::BlockSupported { index: 3 });
        let g = Grid::new(2, 64).unwrap();
        let d = build_dyadic(&g, 0);
        let f = Sampler::new(&s, &g).sample(0, 0, 1, Band::Full, &d).unwrap();
        assert!(f.hermitian_defect() < 1e-15);
        let l1: f64 = f.coeffs().iter().map(|c| c.norm()).sum();
        let sup = inverse_transform(&f).unwrap().max_abs();
        assert!((sup - l1).abs() <= 1e-12 * l1);
    }

    #[test]
    fn convolution_matches_the_grid_product() {
        let s = spec(FieldLaw::GaussianSpectrum { decay: 0.5 });
        let g = Grid::new(2, 32).unwrap();
        let d = build_dyadic(&g, 0);
        let sm = Sampler::new(&s, &g);
        let f = sm.sample(0, 0, 1, Band::Product, &d).unwrap();
        let h = sm.sample(0, 1, 1, Band::Product, &d).unwrap();
        let direct = weighted_convolution(&f, &h, None).unwrap();
        let (pf, ph) = (inverse_transform(&f).unwrap(), inverse_transform(&h).unwrap());
        let data: Vec<f64> = pf.data().iter().zip(ph.data()).map(|(a, b)| a * b).collect();
        let grid_product = forward_transform(&PhysicalField::from_samples(&g, 1, data).unwrap()).unwrap();
        let err = direct.sub(&grid_product).unwrap().l2_norm();
        assert!(err < 1e-13 * direct.l2_norm(), "{err:e}");
    }

    #[test]
    fn weighted_form_is_the_product_of_damped_factors() {
        let s = spec(FieldLaw::Analytic { rate: 0.3 });
        let g = Grid::new(2, 32).unwrap();
        let d = build_dyadic(&g, 0);
        let sm = Sampler::new(&s, &g);
        let f = sm.sample(1, 0, 1, Band::Product, &d).unwrap();
        let h = sm.sample(1, 1, 1, Band::Product, &d).unwrap();
        let w = 0.4;
        let l1 = l1_symbol(&g);
        let logw: Vec<f64> = l1.iter().map(|r| w * r).collect();
        let b = weighted_convolution(&f, &h, Some(&logw)).unwrap();
        // e^{-wΛ}B(f, h) = (e^{-wΛ}f)(e^{-wΛ}h)
        let damp = |x: &SpectralField| {
            let mut y = x.clone();
            for (i, c) in y.coeffs_mut().iter_mut().enumerate() {
                *c *= (-logw[i]).exp();
            }
            y
        };
        let lhs = damp(&b);
        let rhs = weighted_convolution(&damp(&f), &damp(&h), None).unwrap();
        assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-13 * rhs.l2_norm());
    }

    #[test]
    fn div_free_sample_and_validation() {
        let g = Grid::new(2, 32).unwrap();
        let u = random_div_free(&g, 2.0, 11).unwrap();
        assert!(u.divergence_defect() <= 1e-10);
        assert!((u.l2_norm() - 1.0).abs() < 1e-12);
        assert!(u.mean(0) == 0.0 && u.mean(1) == 0.0);
        let mut bad = spec(FieldLaw::Analytic { rate: 1.0 });
        bad.n_samples = 9;
        assert!(bad.validate().unwrap_err().is_validation());
        let wide = Band::Product.limit(&Grid::new(2, 32).unwrap());
        assert_eq!(wide, 7);
        let mut block = spec(FieldLaw::BlockSupported { index: 2 });
        block.resolutions = vec![32, 64];
        block.validate().unwrap();
        block.resolutions = vec![16, 32];
        let e = block.validate().unwrap_err();
        assert!(matches!(e, Error::Validation { ref key, .. } if key == "ensemble.field_law.index"), "{e}");
    }
}
