use crate::error::{Error, Result};
use crate::spectral::ops::apply_real_table;
use crate::spectral::{Grid, SpectralField};

use super::block::Block;
use super::profile::{radial_cutoff, Transition};

/// Littlewood–Paley shells `φ_j(ξ) = ψ(2^{−j}ξ) − ψ(2^{1−j}ξ)` on a lattice.
///
/// The lowest shell `j_min` takes `ψ(2^{−j_min}ξ)` for every `ξ ≠ 0` so that
/// `mean + Σ_j Δ_j = I` exactly; the mean belongs to no shell.
#[derive(Debug, Clone)]
pub struct DyadicSystem {
    grid: Grid,
    transition: Transition,
    j_min: i32,
    j_max: i32,
    blocks: Vec<Block>,
}

impl DyadicSystem {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn transition(&self) -> Transition {
        self.transition
    }

    pub fn j_min(&self) -> i32 {
        self.j_min
    }

    pub fn j_max(&self) -> i32 {
        self.j_max
    }

    pub fn shells(&self) -> impl Iterator<Item = i32> + '_ {
        self.j_min..=self.j_max
    }

    /// `ψ(|ξ|)`.
    pub fn psi(&self, r: f64) -> f64 {
        radial_cutoff(self.transition, r)
    }

    /// `φ(|ξ|) = ψ(|ξ|) − ψ(2|ξ|)`.
    pub fn phi(&self, r: f64) -> f64 {
        self.psi(r) - self.psi(2.0 * r)
    }

    fn check(&self, j: i32) -> Result<()> {
        if j < self.j_min || j > self.j_max {
            return Err(Error::Index {
                index: j.to_string(),
                range: format!("[{}, {}]", self.j_min, self.j_max),
            });
        }
        Ok(())
    }

    pub fn block(&self, j: i32) -> Result<&Block> {
        self.check(j)?;
        Ok(&self.blocks[(j - self.j_min) as usize])
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, &Block)> {
        (self.j_min..).zip(self.blocks.iter())
    }

    /// Multiplier `ψ(2^{−k}ξ)` over the lattice (includes the mean).
    pub fn low_table(&self, k: i32) -> Vec<f64> {
        let scale = 2f64.powi(-k);
        self.grid
            .symbol_table(|xi| self.psi(scale * xi.iter().map(|x| x * x).sum::<f64>().sqrt()))
    }
}

pub fn build_dyadic(grid: &Grid, profile_smoothness: u32) -> DyadicSystem {
    let transition = Transition::from_smoothness(profile_smoothness);
    let scale = grid.scale();
    let j_min = scale.log2().floor() as i32;
    let j_max = (scale * grid.resolution() as f64 / 2.0).log2().ceil() as i32 + 1;
    let psi = |r: f64| radial_cutoff(transition, r);
    let mut blocks = Vec::with_capacity((j_max - j_min + 1) as usize);
    for j in j_min..=j_max {
        let a = 2f64.powi(-j);
        let mut table = grid.symbol_table(|xi| {
            let r = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            if j == j_min {
                psi(a * r)
            } else {
                psi(a * r) - psi(2.0 * a * r)
            }
        });
        table[0] = 0.0;
        blocks.push(Block::from_table(&table));
    }
    DyadicSystem {
        grid: grid.clone(),
        transition,
        j_min,
        j_max,
        blocks,
    }
}

/// `Δ_j f`.
pub fn dyadic_block(f: &SpectralField, j: i32, sys: &DyadicSystem) -> Result<SpectralField> {
    Ok(sys.block(j)?.apply(f))
}

/// `S_k f`, the multiplier `ψ(2^{−k}ξ)`.
pub fn low_freq_project(f: &SpectralField, k: i32, sys: &DyadicSystem) -> Result<SpectralField> {
    if k > sys.j_max {
        return Err(Error::Index {
            index: k.to_string(),
            range: format!("(-inf, {}]", sys.j_max),
        });
    }
    apply_real_table(f, &sys.low_table(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{forward_transform, PhysicalField};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scalar(grid: &Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        forward_transform(&PhysicalField::from_samples(grid, 1, data).unwrap()).unwrap()
    }

    #[test]
    fn shell_range_on_standard_torus() {
        let g = Grid::new(2, 64).unwrap();
        let sys = build_dyadic(&g, 0);
        assert_eq!(sys.j_min(), 0);
        assert_eq!(sys.j_max(), 6);
        assert_eq!(sys.phi(1.0), 1.0);
        assert_eq!(sys.psi(0.5), 1.0);
        assert_eq!(sys.psi(2.5), 0.0);
    }

    #[test]
    fn tables_sum_to_one_and_respect_supports() {
        let g = Grid::new(2, 64).unwrap();
        let sys = build_dyadic(&g, 0);
        let idx = g.index_of(&[5, 3]).unwrap();
        let total: f64 = sys.blocks().map(|(_, b)| b.weight(idx)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for (j, b) in sys.blocks() {
            for &(i, w) in b.support() {
                assert!(w >= 0.0);
                let k = g.mode(i).k;
                let r = ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt();
                let lo = if j == sys.j_min() { 0.0 } else { 2f64.powi(j - 1) };
                assert!(r >= lo && r <= 2f64.powi(j + 1) * (1.0 + 1e-12), "j={j} r={r}");
            }
        }
        for i in 1..g.len() {
            let s: f64 = sys.blocks().map(|(_, b)| b.weight(i)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn reconstruction_and_almost_orthogonality() {
        let g = Grid::new(2, 32).unwrap();
        let sys = build_dyadic(&g, 0);
        let f = random_scalar(&g, 2);
        let mut acc = SpectralField::zeros(&g, 1);
        acc.coeffs_mut()[0] = f.coeff(0, 0);
        for j in sys.shells() {
            acc = acc.add(&dyadic_block(&f, j, &sys).unwrap()).unwrap();
        }
        assert!(acc.sub(&f).unwrap().max_abs() < 1e-14);
        for i in sys.shells() {
            for j in sys.shells() {
                if (i - j).abs() >= 2 {
                    let d = dyadic_block(&dyadic_block(&f, j, &sys).unwrap(), i, &sys).unwrap();
                    assert_eq!(d.max_abs(), 0.0);
                }
            }
        }
        assert!(dyadic_block(&f, 7, &sys).is_err());
    }

    #[test]
    fn exact_shell_mode_passes_whole() {
        let g = Grid::new(2, 64).unwrap();
        let sys = build_dyadic(&g, 0);
        let mut f = SpectralField::zeros(&g, 1);
        f.set_coeff_at(0, &[8, 0], Complex64::new(0.5, 0.0)).unwrap();
        f.set_coeff_at(0, &[-8, 0], Complex64::new(0.5, 0.0)).unwrap();
        let d = dyadic_block(&f, 3, &sys).unwrap();
        assert_eq!(d, f);
    }

    #[test]
    fn low_projection_behaviour() {
        let g = Grid::new(2, 32).unwrap();
        let sys = build_dyadic(&g, 0);
        let f = random_scalar(&g, 4);
        let top = low_freq_project(&f, sys.j_max(), &sys).unwrap();
        assert!(top.sub(&f).unwrap().max_abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in -1..=sys.j_max() {
            let e = low_freq_project(&f, k, &sys).unwrap().sub(&f).unwrap().l2_norm();
            assert!(e <= prev);
            prev = e;
        }
        let mut m = SpectralField::zeros(&g, 1);
        m.set_coeff_at(0, &[9, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(low_freq_project(&m, 2, &sys).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn polynomial_profile_also_partitions() {
        let g = Grid::new(3, 16).unwrap();
        let sys = build_dyadic(&g, 3);
        for i in 1..g.len() {
            let s: f64 = sys.blocks().map(|(_, b)| b.weight(i)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }
}
