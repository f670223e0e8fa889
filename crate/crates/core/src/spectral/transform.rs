use num_complex::Complex64;

use super::field::{PhysicalField, SpectralField};
use super::grid::Grid;
use crate::error::{Error, Result};

pub fn forward_transform(f: &PhysicalField) -> Result<SpectralField> {
    if f.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::RejectedInput("non-finite sample".into()));
    }
    let grid = f.grid();
    let inv_len = 1.0 / grid.len() as f64;
    let mut coeffs = Vec::with_capacity(f.data().len());
    for c in 0..f.components() {
        let mut buf: Vec<Complex64> = f
            .component(c)
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        grid.fft_forward(&mut buf);
        coeffs.extend(buf.into_iter().map(|z| z * inv_len));
    }
    // Real samples have an exactly Hermitian spectrum; the FFT only matches
    // it to rounding, which is O(1) relative to a cancellation residue.
    let mut out = SpectralField::from_coeffs(grid, f.components(), coeffs)?;
    out.symmetrize();
    Ok(out)
}

pub fn inverse_transform(f: &SpectralField) -> Result<PhysicalField> {
    f.check_hermitian()?;
    let grid = f.grid();
    let mut data = Vec::with_capacity(f.coeffs().len());
    for c in 0..f.components() {
        let buf = synthesize(grid, f.component(c));
        data.extend(buf.into_iter().map(|z| z.re));
    }
    PhysicalField::from_samples(grid, f.components(), data)
}

/// Complex samples `Σ_ξ ĉ(ξ) e^{iξ·x}` of one coefficient array; no symmetry
/// assumed.
pub fn synthesize(grid: &Grid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    grid.fft_inverse(&mut buf);
    buf
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        Err(Error::param("p", format!("{p} is below 1")))
    } else {
        Ok(())
    }
}

/// Riemann-sum `L^p` norm of sample magnitudes; `p = ∞` is the max.
pub fn lp_of_samples(mags: impl Iterator<Item = f64>, cell_volume: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return mags.fold(0.0, f64::max);
    }
    if p == 1.0 {
        return mags.sum::<f64>() * cell_volume;
    }
    if p == 2.0 {
        return (mags.map(|m| m * m).sum::<f64>() * cell_volume).sqrt();
    }
    // rescale by the max so large p cannot overflow
    let v: Vec<f64> = mags.collect();
    let top = v.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().map(|m| (m / top).powf(p)).sum();
    top * (s * cell_volume).powf(1.0 / p)
}

/// `L^p` norm over the torus; vector fields use the pointwise Euclidean
/// magnitude.
pub fn lp_norm(f: &PhysicalField, p: f64) -> Result<f64> {
    check_p(p)?;
    let cell = f.grid().cell_volume();
    if f.components() == 1 {
        Ok(lp_of_samples(f.data().iter().map(|v| v.abs()), cell, p))
    } else {
        Ok(lp_of_samples(f.magnitude().into_iter(), cell, p))
    }
}

/// `L^p` norm of the field with coefficients `coeffs` (one array per
/// component), without requiring conjugate symmetry: the modulus of the
/// complex samples is used.
pub fn lp_norm_coeffs(grid: &Grid, coeffs: &[&[Complex64]], p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 2.0 {
        // discrete Parseval: the Riemann sum equals volume·Σ|c|²
        let e: f64 = coeffs.iter().flat_map(|c| c.iter()).map(|z| z.norm_sqr()).sum();
        return Ok((e * grid.volume()).sqrt());
    }
    let cell = grid.cell_volume();
    if coeffs.len() == 1 {
        let s = synthesize(grid, coeffs[0]);
        return Ok(lp_of_samples(s.iter().map(|z| z.norm()), cell, p));
    }
    let mut mag2 = vec![0.0; grid.len()];
    for comp in coeffs {
        for (m, z) in mag2.iter_mut().zip(synthesize(grid, comp)) {
            *m += z.norm_sqr();
        }
    }
    Ok(lp_of_samples(mag2.into_iter().map(f64::sqrt), cell, p))
}

/// `L^p` norm of a spectral field evaluated on the collocation grid.
pub fn spectral_lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    let comps: Vec<&[Complex64]> = (0..f.components()).map(|c| f.component(c)).collect();
    lp_norm_coeffs(f.grid(), &comps, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_physical(grid: &Grid, comps: usize, seed: u64) -> PhysicalField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..comps * grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        PhysicalField::from_samples(grid, comps, data).unwrap()
    }

    #[test]
    fn constant_maps_to_zero_mode() {
        let g = Grid::new(2, 16).unwrap();
        let f = PhysicalField::from_fn(&g, 1, |_, _| 1.0).unwrap();
        let s = forward_transform(&f).unwrap();
        assert_relative_eq!(s.coeff(0, 0).re, 1.0, epsilon = 1e-15);
        for idx in 1..g.len() {
            assert!(s.coeff(0, idx).norm() < 1e-15);
        }
    }

    #[test]
    fn cosine_maps_to_half_pair() {
        let g = Grid::new(2, 16).unwrap();
        let f = PhysicalField::from_fn(&g, 1, |_, x| x[0].cos()).unwrap();
        let s = forward_transform(&f).unwrap();
        for idx in 0..g.len() {
            let k = g.mode(idx).k;
            let expect = if k[1] == 0 && k[0].abs() == 1 { 0.5 } else { 0.0 };
            assert!((s.coeff(0, idx) - Complex64::new(expect, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn round_trip_random_fields() {
        for (n, res) in [(2, 8), (2, 32), (2, 64), (3, 16)] {
            let g = Grid::new(n, res).unwrap();
            let f = random_physical(&g, n, 7);
            let back = inverse_transform(&forward_transform(&f).unwrap()).unwrap();
            let err = f
                .data()
                .iter()
                .zip(back.data())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            assert!(err <= 1e-12 * f.max_abs(), "n={n} N={res} err={err}");
        }
    }

    #[test]
    fn zero_coefficients_give_zero_samples() {
        let g = Grid::new(3, 8).unwrap();
        let z = SpectralField::zeros(&g, 3);
        assert_eq!(inverse_transform(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn half_pair_synthesizes_cosine() {
        let g = Grid::new(2, 32).unwrap();
        let mut s = SpectralField::zeros(&g, 1);
        s.set_coeff_at(0, &[1, 0], Complex64::new(0.5, 0.0)).unwrap();
        s.set_coeff_at(0, &[-1, 0], Complex64::new(0.5, 0.0)).unwrap();
        let f = inverse_transform(&s).unwrap();
        for idx in 0..g.len() {
            assert!((f.data()[idx] - g.point(idx)[0].cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn asymmetric_coefficients_are_rejected() {
        let g = Grid::new(2, 8).unwrap();
        let mut s = SpectralField::zeros(&g, 1);
        s.set_coeff_at(0, &[1, 2], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(inverse_transform(&s), Err(Error::CorruptedField(_))));
    }

    #[test]
    fn non_finite_samples_are_rejected() {
        let g = Grid::new(2, 8).unwrap();
        let mut d = vec![0.0; g.len()];
        d[3] = f64::NAN;
        let f = PhysicalField::from_samples(&g, 1, d).unwrap();
        assert!(matches!(forward_transform(&f), Err(Error::RejectedInput(_))));
    }

    #[test]
    fn lp_norms_of_simple_fields() {
        let g = Grid::new(2, 32).unwrap();
        let c = PhysicalField::from_fn(&g, 1, |_, _| -3.0).unwrap();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            let expect = if p.is_infinite() { 3.0 } else { 3.0 * (4.0 * PI * PI).powf(1.0 / p) };
            assert_relative_eq!(lp_norm(&c, p).unwrap(), expect, max_relative = 1e-13);
        }
        let cosine = PhysicalField::from_fn(&g, 1, |_, x| x[0].cos()).unwrap();
        assert_relative_eq!(lp_norm(&cosine, f64::INFINITY).unwrap(), 1.0, epsilon = 1e-15);
        // ∫∫cos² over [0,2π]² = 2π²
        assert_relative_eq!(
            lp_norm(&cosine, 2.0).unwrap(),
            (2.0 * PI * PI).sqrt(),
            max_relative = 1e-13
        );
        assert!(lp_norm(&cosine, 0.5).is_err());
    }

    #[test]
    fn parseval_identity() {
        let g = Grid::new(2, 32).unwrap();
        let f = random_physical(&g, 1, 11);
        let s = forward_transform(&f).unwrap();
        let lhs = lp_norm(&f, 2.0).unwrap().powi(2);
        let rhs = g.volume() * s.coeff_energy();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }
}
