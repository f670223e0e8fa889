use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimates::random_div_free;
use crate::spaces::{snapshot_norm, NormSpec, Systems};
use crate::spectral::{Grid, SpectralField};

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Initial datum. `taylor_green` and `single_mode` scale a fixed field by
/// `amplitude`; `random_div_free` and `analytic` are normalized so that
/// `amplitude` is their critical-norm value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    TaylorGreen {
        #[serde(default = "one")]
        amplitude: f64,
    },
    RandomDivFree {
        #[serde(default = "two")]
        decay: f64,
        amplitude: f64,
        /// Defaults to the run seed.
        #[serde(default)]
        seed: Option<u64>,
    },
    SingleMode {
        mode: Vec<i64>,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Analytic {
        rate: f64,
        amplitude: f64,
    },
}

fn check_amplitude(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(Error::validation("data.amplitude", format!("{a} is not finite and >= 0")))
    }
}

/// `(sin x cos y, −cos x sin y)`, and in 3D `(sin x cos y cos z, −cos x sin y cos z, 0)`.
pub fn taylor_green(grid: &Grid) -> Result<SpectralField> {
    let n = grid.n_dims();
    let mut u = SpectralField::zeros(grid, n);
    let signs: &[i64] = &[-1, 1];
    let z_signs: &[i64] = if n == 3 { &[-1, 1] } else { &[0] };
    let amp = if n == 3 { 0.125 } else { 0.25 };
    for &sx in signs {
        for &sy in signs {
            for &sz in z_signs {
                let k: Vec<i64> = if n == 3 { vec![sx, sy, sz] } else { vec![sx, sy] };
                // sin(x) = (e^{ix} − e^{−ix})/2i, cos = (e^{i·} + e^{−i·})/2
                let a = Complex64::new(0.0, -amp * sx as f64);
                let b = Complex64::new(0.0, amp * sy as f64);
                u.set_coeff_at(0, &k, a)?;
                u.set_coeff_at(1, &k, b)?;
            }
        }
    }
    u.mark_divergence_free()?;
    Ok(u)
}

/// `e cos(ξ₀·x)` with a unit `e ⊥ ξ₀`.
fn single_mode(grid: &Grid, mode: &[i64]) -> Result<SpectralField> {
    let n = grid.n_dims();
    if mode.len() != n {
        return Err(Error::validation(
            "data.mode",
            format!("{} entries for a {n}D grid", mode.len()),
        ));
    }
    if mode.iter().all(|&k| k == 0) {
        return Err(Error::validation("data.mode", "the zero mode carries no divergence-free field"));
    }
    let half = (grid.resolution() / 2) as i64;
    if mode.iter().any(|k| k.abs() >= half) {
        return Err(Error::validation(
            "data.mode",
            format!("{mode:?} reaches beyond N/2 = {half}"),
        ));
    }
    let xi: Vec<f64> = mode.iter().map(|&k| k as f64).collect();
    let mut e = if n == 2 {
        vec![-xi[1], xi[0]]
    } else {
        // cross with the axis ξ₀ leans on least
        let axis = (0..3)
            .min_by(|&a, &b| xi[a].abs().total_cmp(&xi[b].abs()))
            .expect("three axes");
        let mut a = [0.0; 3];
        a[axis] = 1.0;
        vec![
            xi[1] * a[2] - xi[2] * a[1],
            xi[2] * a[0] - xi[0] * a[2],
            xi[0] * a[1] - xi[1] * a[0],
        ]
    };
    let len = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    e.iter_mut().for_each(|v| *v /= len);
    let mut u = SpectralField::zeros(grid, n);
    let neg: Vec<i64> = mode.iter().map(|k| -k).collect();
    for (c, ec) in e.iter().enumerate() {
        u.set_coeff_at(c, mode, Complex64::new(0.5 * ec, 0.0))?;
        u.set_coeff_at(c, &neg, Complex64::new(0.5 * ec, 0.0))?;
    }
    u.mark_divergence_free()?;
    Ok(u)
}

/// `curl` of a potential with `ψ̂ = e^{−rate|ξ|₁}/|ξ|` (`∇^⊥ψ` in 2D,
/// `∇ × (ψ, ψ, ψ)` in 3D), restricted to the 2/3 band.
fn analytic(grid: &Grid, rate: f64) -> Result<SpectralField> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::validation("data.rate", format!("{rate} is not positive")));
    }
    let n = grid.n_dims();
    let cut = grid.dealias_cutoff();
    let mut u = SpectralField::from_fn(grid, n, |c, k| {
        if k.iter().all(|&v| v == 0) || k.iter().any(|v| v.abs() > cut) {
            return Complex64::new(0.0, 0.0);
        }
        let r = k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
        let psi = (-rate * k.iter().map(|v| v.abs() as f64).sum::<f64>()).exp() / r;
        let d = if n == 2 {
            if c == 0 { k[1] as f64 } else { -(k[0] as f64) }
        } else {
            // (ξ × (1,1,1))_c
            let (a, b) = ((c + 1) % 3, (c + 2) % 3);
            (k[a] - k[b]) as f64
        };
        Complex64::new(0.0, d * psi)
    })?;
    u.mark_divergence_free()?;
    Ok(u)
}

fn normalized(u: SpectralField, amplitude: f64, critical: &NormSpec, sys: &Systems) -> Result<SpectralField> {
    let norm = snapshot_norm(&u, 0.0, critical, sys)?;
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::validation("data", format!("the datum has critical norm {norm}")));
    }
    Ok(u.scaled(amplitude / norm))
}

/// Builds a divergence-free, zero-mean, Hermitian datum on `grid`;
/// `critical` is the norm amplitudes are measured in.
pub fn init_data(spec: &DataSpec, grid: &Grid, critical: &NormSpec, run_seed: u64) -> Result<SpectralField> {
    let sys = Systems::new(grid);
    let u = match *spec {
        DataSpec::TaylorGreen { amplitude } => {
            check_amplitude(amplitude)?;
            taylor_green(grid)?.scaled(amplitude)
        }
        DataSpec::SingleMode { ref mode, amplitude } => {
            check_amplitude(amplitude)?;
            single_mode(grid, mode)?.scaled(amplitude)
        }
        DataSpec::RandomDivFree { decay, amplitude, seed } => {
            check_amplitude(amplitude)?;
            if !(decay.is_finite() && decay >= 0.0) {
                return Err(Error::validation("data.decay", format!("{decay} is not finite and >= 0")));
            }
            normalized(random_div_free(grid, decay, seed.unwrap_or(run_seed))?, amplitude, critical, &sys)?
        }
        DataSpec::Analytic { rate, amplitude } => {
            check_amplitude(amplitude)?;
            normalized(analytic(grid, rate)?, amplitude, critical, &sys)?
        }
    };
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::inverse_transform;

    fn crit() -> NormSpec {
        NormSpec::besov(0.0, 2.0, 1.0)
    }

    #[test]
    fn taylor_green_matches_its_samples() {
        let g = Grid::new(2, 16).unwrap();
        let u = init_data(&DataSpec::TaylorGreen { amplitude: 2.0 }, &g, &crit(), 0).unwrap();
        let phys = inverse_transform(&u).unwrap();
        for idx in 0..g.len() {
            let [x, y, _] = g.point(idx);
            let want = [2.0 * x.sin() * y.cos(), -2.0 * x.cos() * y.sin()];
            for c in 0..2 {
                assert!((phys.component(c)[idx] - want[c]).abs() < 1e-14);
            }
        }
        let unit = taylor_green(&g).unwrap();
        assert!((u.l2_norm() - 2.0 * unit.l2_norm()).abs() < 1e-14);
    }

    #[test]
    fn data_are_admissible() {
        for (n, res) in [(2, 32), (3, 16)] {
            let g = Grid::new(n, res).unwrap();
            let mode = if n == 2 { vec![3, -2] } else { vec![1, 2, -3] };
            let specs = [
                DataSpec::TaylorGreen { amplitude: 1.0 },
                DataSpec::RandomDivFree { decay: 2.0, amplitude: 0.3, seed: None },
                DataSpec::SingleMode { mode, amplitude: 1.0 },
                DataSpec::Analytic { rate: 0.5, amplitude: 0.3 },
            ];
            for s in &specs {
                let u = init_data(s, &g, &crit(), 5).unwrap();
                assert!(u.divergence_defect() <= 1e-10, "{s:?}");
                assert!(u.hermitian_defect() <= 1e-14, "{s:?}");
                for c in 0..n {
                    assert!(u.mean(c).abs() < 1e-15);
                }
            }
            let sys = Systems::new(&g);
            let u = init_data(&specs[1], &g, &crit(), 5).unwrap();
            assert!((snapshot_norm(&u, 0.0, &crit(), &sys).unwrap() - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unresolved_modes() {
        let g = Grid::new(2, 16).unwrap();
        for mode in [vec![8, 0], vec![0, 0], vec![1, 2, 3]] {
            let e = init_data(&DataSpec::SingleMode { mode, amplitude: 1.0 }, &g, &crit(), 0).unwrap_err();
            assert!(matches!(e, Error::Validation { ref key, .. } if key == "data.mode"), "{e}");
        }
        let e = init_data(&DataSpec::Analytic { rate: -1.0, amplitude: 1.0 }, &g, &crit(), 0).unwrap_err();
        assert!(e.is_validation());
    }

    #[test]
    fn parses_from_toml() {
        let s: DataSpec = toml::from_str("kind = \"single_mode\"\nmode = [1, 2]").unwrap();
        assert_eq!(s, DataSpec::SingleMode { mode: vec![1, 2], amplitude: 1.0 });
        assert!(toml::from_str::<DataSpec>("kind = \"analytic\"\nrate = 1\namplitude = 1\nextra = 2").is_err());
    }
}
