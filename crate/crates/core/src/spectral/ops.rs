use num_complex::Complex64;

use super::field::{PhysicalField, SpectralField};
use super::grid::Grid;
use super::transform::{forward_transform, inverse_transform};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Multiplies every coefficient by `m(ξ)` (ξ in physical wavenumber units).
/// Nyquist modes receive the average of `m` over their `±N/2`
/// representatives.
pub fn apply_multiplier<F>(f: &SpectralField, m: F) -> Result<SpectralField>
where
    F: Fn(&[f64]) -> Complex64,
{
    let grid = f.grid();
    let table: Vec<Complex64> = (0..grid.len()).map(|i| grid.eval_symbol(i, &m)).collect();
    apply_table(f, &table)
}

/// Multiplies by a precomputed complex symbol table.
pub fn apply_table(f: &SpectralField, table: &[Complex64]) -> Result<SpectralField> {
    if let Some(bad) = table.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::param(
            "multiplier",
            format!("non-finite value at lattice index {bad}"),
        ));
    }
    let mut out = f.clone();
    for c in 0..f.components() {
        for (v, m) in out.component_mut(c).iter_mut().zip(table) {
            *v *= m;
        }
    }
    Ok(out)
}

/// Multiplies by a precomputed real symbol table.
pub fn apply_real_table(f: &SpectralField, table: &[f64]) -> Result<SpectralField> {
    if let Some(bad) = table.iter().position(|z| !z.is_finite()) {
        return Err(Error::param(
            "multiplier",
            format!("non-finite value at lattice index {bad}"),
        ));
    }
    let mut out = f.clone();
    for c in 0..f.components() {
        for (v, m) in out.component_mut(c).iter_mut().zip(table) {
            *v *= m;
        }
    }
    Ok(out)
}

fn require_vector(u: &SpectralField) -> Result<()> {
    if u.components() != u.grid().n_dims() {
        return Err(Error::RejectedInput(format!(
            "expected a vector field with {} components, got {}",
            u.grid().n_dims(),
            u.components()
        )));
    }
    Ok(())
}

/// Leray projection `û ↦ (I − ξξᵀ/|ξ|²)û`. The mean passes through; Nyquist
/// planes are zeroed.
pub fn leray_project(u: &SpectralField) -> Result<SpectralField> {
    require_vector(u)?;
    let grid = u.grid();
    let n = grid.n_dims();
    let s = grid.scale();
    let mut out = u.clone();
    let len = grid.len();
    for idx in 0..len {
        let m = grid.mode(idx);
        if m.is_nyquist() {
            for c in 0..n {
                out.coeffs_mut()[c * len + idx] = ZERO;
            }
            continue;
        }
        if m.is_zero() {
            continue;
        }
        let xi: Vec<f64> = m.k[..n].iter().map(|&k| k as f64 * s).collect();
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        let mut dot = ZERO;
        for c in 0..n {
            dot += u.coeff(c, idx) * xi[c];
        }
        let dot = dot / xi2;
        for c in 0..n {
            out.coeffs_mut()[c * len + idx] -= dot * xi[c];
        }
    }
    out.set_divergence_free_unchecked(true);
    Ok(out)
}

/// Zeroes every mode outside the 2/3-rule band.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let grid = f.grid();
    let mut out = f.clone();
    let len = grid.len();
    for idx in 0..len {
        if !grid.dealias_keep(idx) {
            for c in 0..f.components() {
                out.coeffs_mut()[c * len + idx] = ZERO;
            }
        }
    }
    out
}

fn truncated_samples(f: &SpectralField) -> Result<PhysicalField> {
    inverse_transform(&dealias(f))
}

fn dealiased_transform(grid: &Grid, data: Vec<f64>) -> Result<SpectralField> {
    let p = PhysicalField::from_samples(grid, 1, data)?;
    Ok(dealias(&forward_transform(&p)?))
}

/// Dealiased pointwise product of two scalar fields.
pub fn product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.components() != 1 || g.components() != 1 || f.grid() != g.grid() {
        return Err(Error::RejectedInput(
            "product expects two scalar fields on one grid".into(),
        ));
    }
    let a = truncated_samples(f)?;
    let b = truncated_samples(g)?;
    let data = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    dealiased_transform(f.grid(), data)
}

/// Dealiased products `(u_i u_j)^` for `i ≤ j`, indexed by `i*n + j`.
fn tensor_products(u: &SpectralField) -> Result<Vec<Option<SpectralField>>> {
    let phys = truncated_samples(u)?;
    symmetric_tensor(u.grid(), &phys, &phys)
}

/// `(½(a_i b_j + a_j b_i))^` for `i ≤ j`; equals `a_i a_j` bit for bit when
/// `a` and `b` coincide.
fn symmetric_tensor(grid: &Grid, a: &PhysicalField, b: &PhysicalField) -> Result<Vec<Option<SpectralField>>> {
    let n = grid.n_dims();
    let mut out = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let (ai, aj, bi, bj) = (a.component(i), a.component(j), b.component(i), b.component(j));
            let data = (0..grid.len())
                .map(|x| 0.5 * (ai[x] * bj[x] + aj[x] * bi[x]))
                .collect();
            out[i * n + j] = Some(dealiased_transform(grid, data)?);
        }
    }
    Ok(out)
}

fn tensor_entry(t: &[Option<SpectralField>], n: usize, i: usize, j: usize) -> &SpectralField {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    t[a * n + b].as_ref().expect("upper triangle filled")
}

/// `P div(u⊗u)` with 2/3-rule dealiasing.
pub fn nonlinear_term(u: &SpectralField) -> Result<SpectralField> {
    require_vector(u)?;
    leray_divergence(u.grid(), &tensor_products(u)?)
}

/// The symmetric bilinear form `B(a, b) = P div(½(a⊗b + b⊗a))`, so that
/// `B(u, u)` is [`nonlinear_term`] and `N(u) − N(v) = B(u − v, u + v)`.
/// Evaluating a difference this way keeps its rounding proportional to
/// `|u − v|` rather than `|u|²`.
pub fn nonlinear_bilinear(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    require_vector(a)?;
    require_vector(b)?;
    if a.grid() != b.grid() || a.components() != b.components() {
        return Err(Error::RejectedInput("fields live on different grids".into()));
    }
    let pa = truncated_samples(a)?;
    let pb = truncated_samples(b)?;
    leray_divergence(a.grid(), &symmetric_tensor(a.grid(), &pa, &pb)?)
}

fn leray_divergence(grid: &Grid, t: &[Option<SpectralField>]) -> Result<SpectralField> {
    let n = grid.n_dims();
    let s = grid.scale();
    let mut div = SpectralField::zeros(grid, n);
    let len = grid.len();
    for idx in 0..len {
        let m = grid.mode(idx);
        if m.is_nyquist() {
            continue;
        }
        for i in 0..n {
            let mut acc = ZERO;
            for j in 0..n {
                let xi = m.k[j] as f64 * s;
                acc += Complex64::new(0.0, xi) * tensor_entry(t, n, i, j).coeff(0, idx);
            }
            div.coeffs_mut()[i * len + idx] = acc;
        }
    }
    leray_project(&div)
}

/// Zero-mean pressure `p̂ = −ξξᵀ:(u⊗u)^ / |ξ|²`, i.e. `−Δp = div div(u⊗u)`,
/// the balance implied by `u_t + (−Δ)^α u + u·∇u + ∇p = 0` for divergence-free `u`.
pub fn recover_pressure(u: &SpectralField) -> Result<SpectralField> {
    require_vector(u)?;
    let grid = u.grid();
    let n = grid.n_dims();
    let s = grid.scale();
    let t = tensor_products(u)?;
    let mut p = SpectralField::zeros(grid, 1);
    for idx in 0..grid.len() {
        let m = grid.mode(idx);
        if m.is_zero() || m.is_nyquist() {
            continue;
        }
        let xi: Vec<f64> = m.k[..n].iter().map(|&k| k as f64 * s).collect();
        let xi2: f64 = xi.iter().map(|x| x * x).sum();
        let mut acc = ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += tensor_entry(&t, n, i, j).coeff(0, idx) * (xi[i] * xi[j]);
            }
        }
        p.coeffs_mut()[idx] = -acc / xi2;
    }
    Ok(p)
}

/// Spectral partial derivative `∂_{x_axis}` applied `order` times.
pub fn derivative(f: &SpectralField, axis: usize, order: u32) -> Result<SpectralField> {
    if axis >= f.grid().n_dims() {
        return Err(Error::param("axis", format!("{axis} exceeds dimension")));
    }
    apply_multiplier(f, |xi| Complex64::new(0.0, xi[axis]).powu(order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::transform::spectral_lp_norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vector(grid: &Grid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n_dims();
        let data = (0..n * grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = PhysicalField::from_samples(grid, n, data).unwrap();
        let mut s = forward_transform(&p).unwrap();
        s.zero_nyquist();
        s
    }

    fn taylor_green(grid: &Grid) -> SpectralField {
        let p = PhysicalField::from_fn(grid, 2, |c, x| {
            if c == 0 {
                x[0].sin() * x[1].cos()
            } else {
                -x[0].cos() * x[1].sin()
            }
        })
        .unwrap();
        forward_transform(&p).unwrap()
    }

    #[test]
    fn identity_multiplier_is_identity() {
        let g = Grid::new(2, 16).unwrap();
        let f = random_vector(&g, 1);
        let h = apply_multiplier(&f, |_| Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(h, f);
    }

    #[test]
    fn fractional_laplacian_and_lambda_weight_on_single_modes() {
        let g = Grid::new(2, 16).unwrap();
        let mut f = SpectralField::zeros(&g, 1);
        f.set_coeff_at(0, &[3, 4], Complex64::new(1.0, 0.0)).unwrap();
        let alpha = 0.75;
        let h = apply_multiplier(&f, |xi| {
            Complex64::new((xi[0] * xi[0] + xi[1] * xi[1]).powf(alpha), 0.0)
        })
        .unwrap();
        assert!((h.coeff_at(0, &[3, 4]).re - 5f64.powf(1.5)).abs() < 1e-12);

        let mut f = SpectralField::zeros(&g, 1);
        f.set_coeff_at(0, &[1, 1], Complex64::new(1.0, 0.0)).unwrap();
        let theta = 0.3;
        let h = apply_multiplier(&f, |xi| {
            Complex64::new((theta * (xi[0].abs() + xi[1].abs())).exp(), 0.0)
        })
        .unwrap();
        assert!((h.coeff_at(0, &[1, 1]).re - (2.0 * theta).exp()).abs() < 1e-14);
    }

    #[test]
    fn non_finite_multiplier_is_rejected() {
        let g = Grid::new(2, 8).unwrap();
        let f = SpectralField::zeros(&g, 1);
        let r = apply_multiplier(&f, |xi| Complex64::new(1.0 / xi[0], 0.0));
        assert!(matches!(r, Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn odd_multiplier_keeps_real_fields_real() {
        let g = Grid::new(2, 16).unwrap();
        let mut f = forward_transform(
            &PhysicalField::from_samples(
                &g,
                1,
                (0..g.len()).map(|i| ((i * 37 % 11) as f64).sin()).collect(),
            )
            .unwrap(),
        )
        .unwrap();
        f.symmetrize();
        let d = derivative(&f, 0, 1).unwrap();
        assert!(d.hermitian_defect() < 1e-14);
    }

    #[test]
    fn leray_kills_gradients() {
        let g = Grid::new(3, 16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut phi = SpectralField::zeros(&g, 1);
        for idx in 0..g.len() {
            phi.coeffs_mut()[idx] = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        phi.symmetrize();
        phi.zero_nyquist();
        let mut grad = SpectralField::zeros(&g, 3);
        for c in 0..3 {
            let d = derivative(&phi, c, 1).unwrap();
            grad.component_mut(c).copy_from_slice(d.component(0));
        }
        let p = leray_project(&grad).unwrap();
        assert!(p.max_abs() <= 1e-14 * grad.max_abs());
    }

    #[test]
    fn leray_is_an_orthogonal_projection() {
        for (n, res) in [(2, 32), (3, 16)] {
            let g = Grid::new(n, res).unwrap();
            let u = random_vector(&g, 5);
            let p = leray_project(&u).unwrap();
            assert!(p.divergence_defect() <= 1e-10);
            let pp = leray_project(&p).unwrap();
            assert!(pp.sub(&p).unwrap().l2_norm() <= 1e-13 * u.l2_norm());
            let rest = u.sub(&p).unwrap();
            assert!(p.inner(&rest).unwrap().abs() <= 1e-10 * u.l2_norm().powi(2));
            // unchanged on its range
            assert!(pp.sub(&p).unwrap().max_abs() <= 1e-14 * p.max_abs());
        }
    }

    #[test]
    fn taylor_green_nonlinearity_is_a_gradient() {
        let g = Grid::new(2, 32).unwrap();
        let u = taylor_green(&g);
        let nl = nonlinear_term(&u).unwrap();
        assert!(spectral_lp_norm(&nl, f64::INFINITY).unwrap() < 1e-13);
        assert!(nonlinear_term(&SpectralField::zeros(&g, 2)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn nonlinearity_is_energy_neutral() {
        for (n, res) in [(2, 32), (3, 16)] {
            let g = Grid::new(n, res).unwrap();
            let u = leray_project(&random_vector(&g, 9)).unwrap();
            let nl = nonlinear_term(&u).unwrap();
            assert!(nl.divergence_defect() <= 1e-10);
            let ip = nl.inner(&u).unwrap();
            assert!(ip.abs() <= 1e-9 * nl.l2_norm() * u.l2_norm(), "{ip}");
        }
    }

    #[test]
    fn bilinear_form_polarizes_the_nonlinearity() {
        let g = Grid::new(2, 32).unwrap();
        let u = leray_project(&random_vector(&g, 3)).unwrap();
        let v = leray_project(&random_vector(&g, 4)).unwrap();
        let diag = nonlinear_bilinear(&u, &u).unwrap();
        assert_eq!(diag.coeffs(), nonlinear_term(&u).unwrap().coeffs());
        let direct = nonlinear_term(&u).unwrap().sub(&nonlinear_term(&v).unwrap()).unwrap();
        let polar = nonlinear_bilinear(&u.sub(&v).unwrap(), &u.add(&v).unwrap()).unwrap();
        assert!(polar.sub(&direct).unwrap().max_abs() <= 1e-12 * direct.max_abs());
        // scaling the first slot by 1e-30 scales the result exactly
        let tiny = nonlinear_bilinear(&u.scaled(1e-30), &v).unwrap();
        let unit = nonlinear_bilinear(&u, &v).unwrap();
        assert!(tiny.scaled(1e30).sub(&unit).unwrap().max_abs() <= 1e-14 * unit.max_abs());
    }

    #[test]
    fn taylor_green_pressure_balances_momentum() {
        let g = Grid::new(2, 32).unwrap();
        let u = taylor_green(&g);
        let p = recover_pressure(&u).unwrap();
        // (cos 2x₁ + cos 2x₂)/4
        for idx in 0..g.len() {
            let k = g.mode(idx).k;
            let expect = if (k[0].abs() == 2 && k[1] == 0) || (k[1].abs() == 2 && k[0] == 0) {
                0.125
            } else {
                0.0
            };
            let e = (p.coeff(0, idx) - Complex64::new(expect, 0.0)).norm(); assert!(e < 1e-14, "{:?} {e}", k);
        }
        // −Δp = div div(u⊗u) mode by mode
        let lap = apply_multiplier(&p, |xi| Complex64::new(xi.iter().map(|x| x * x).sum(), 0.0)).unwrap();
        let t = tensor_products(&u).unwrap();
        for idx in 0..g.len() {
            let k = g.mode(idx).k;
            let mut rhs = ZERO;
            for i in 0..2 {
                for j in 0..2 {
                    rhs -= tensor_entry(&t, 2, i, j).coeff(0, idx) * ((k[i] * k[j]) as f64);
                }
            }
            if !g.mode(idx).is_zero() {
                assert!((lap.coeff(0, idx) - rhs).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn pressure_of_trivial_fields_vanishes() {
        let g = Grid::new(2, 16).unwrap();
        assert_eq!(recover_pressure(&SpectralField::zeros(&g, 2)).unwrap().max_abs(), 0.0);
        let mut c = SpectralField::zeros(&g, 2);
        c.coeffs_mut()[0] = Complex64::new(0.7, 0.0);
        c.coeffs_mut()[g.len()] = Complex64::new(-0.2, 0.0);
        assert!(recover_pressure(&c).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn product_of_modes_is_exact() {
        let g = Grid::new(2, 32).unwrap();
        let mut f = SpectralField::zeros(&g, 1);
        f.set_coeff_at(0, &[3, 1], Complex64::new(0.5, 0.0)).unwrap();
        f.set_coeff_at(0, &[-3, -1], Complex64::new(0.5, 0.0)).unwrap();
        let sq = product(&f, &f).unwrap();
        assert!((sq.coeff_at(0, &[0, 0]).re - 0.5).abs() < 1e-15);
        assert!((sq.coeff_at(0, &[6, 2]).re - 0.25).abs() < 1e-15);
    }
}
