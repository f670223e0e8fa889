use super::config::SolverConfig;
use super::stepper::step_solve_with;
use crate::error::{Error, Result};
use crate::spaces::{cumulative_trace_norm, EvolutionTrace, Systems};
use crate::spectral::SpectralField;

/// The blow-up functional on every prefix of the trace: the max of the
/// Picard metric norms accumulated on `[0, t_i]`.
pub fn continuation_series(tr: &EvolutionTrace, cfg: &SolverConfig, sys: &Systems) -> Result<Vec<f64>> {
    let grid = tr
        .grid()
        .ok_or_else(|| Error::RejectedInput("empty trace".into()))?;
    let mut out: Vec<f64> = vec![0.0; tr.len()];
    for spec in cfg.metric_norms(grid.n_dims()) {
        let v = cumulative_trace_norm(tr, &spec, sys)?;
        for (o, x) in out.iter_mut().zip(v) {
            *o = o.max(x);
        }
    }
    Ok(out)
}

/// The blow-up functional on the whole trace.
pub fn continuation_functional(tr: &EvolutionTrace, cfg: &SolverConfig) -> Result<f64> {
    let grid = tr
        .grid()
        .ok_or_else(|| Error::RejectedInput("empty trace".into()))?;
    let sys = Systems::new(grid);
    Ok(*continuation_series(tr, cfg, &sys)?.last().expect("nonempty"))
}

/// Relative `L²` discrepancy between the solution from `λ^{2α−1}u₀(λ·)` at
/// time `T/λ^{2α}` and the rescaled solution `λ^{2α−1}u(T, λ·)`.
pub fn scaling_symmetry_check(u0: &SpectralField, lambda: i64, cfg: &SolverConfig) -> Result<f64> {
    if lambda < 1 {
        return Err(Error::param("lambda", format!("{lambda} is not a positive integer")));
    }
    let a = cfg.alpha;
    let amp = (lambda as f64).powf(2.0 * a - 1.0);
    let tscale = (lambda as f64).powf(2.0 * a);
    let u0_l = u0.dilate(lambda)?.scaled(amp);
    let sys = Systems::new(u0.grid());
    let big = step_solve_with(u0, cfg, &sys)?;
    let small_cfg = SolverConfig {
        t_end: cfg.t_end / tscale,
        dt: cfg.dt / tscale,
        ..cfg.clone()
    };
    let scaled = step_solve_with(&u0_l, &small_cfg, &sys)?;
    let (_, u_end) = big.last().expect("nonempty");
    let (_, ul_end) = scaled.last().expect("nonempty");
    let den = ul_end.l2_norm();
    let diff = dilation_mismatch(ul_end, u_end, lambda, amp);
    Ok(if den > 0.0 { diff / den } else { diff })
}

/// `‖v − a·u(λ·)‖₂`, where modes of `u` that dilate off the lattice count
/// in full (the solver's roundoff fills every mode, so `dilate` would refuse).
fn dilation_mismatch(v: &SpectralField, u: &SpectralField, lambda: i64, a: f64) -> f64 {
    let grid = u.grid();
    let n = grid.n_dims();
    let half = (grid.resolution() / 2) as i64;
    let len = grid.len();
    let mut target = v.coeffs().to_vec();
    let mut off = 0.0;
    for idx in 0..len {
        let m = grid.mode(idx);
        let k: Vec<i64> = m.k[..n].iter().map(|x| x * lambda).collect();
        let dest = if m.is_nyquist() || k.iter().any(|x| x.abs() >= half) {
            None
        } else {
            grid.index_of(&k)
        };
        for c in 0..u.components() {
            let w = u.coeff(c, idx) * a;
            match dest {
                Some(d) => target[c * len + d] -= w,
                None => off += w.norm_sqr(),
            }
        }
    }
    let on: f64 = target.iter().map(|c| c.norm_sqr()).sum();
    ((on + off) * grid.volume()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{time_norm, NormSpec, WeightSpec};
    use crate::spectral::Grid;
    use num_complex::Complex64;

    fn shear(grid: &Grid, k: i64, a: f64) -> SpectralField {
        let mut u = SpectralField::zeros(grid, 2);
        u.set_coeff_at(0, &[0, k], Complex64::new(a / 2.0, 0.0)).unwrap();
        u.set_coeff_at(0, &[0, -k], Complex64::new(a / 2.0, 0.0)).unwrap();
        u
    }

    fn heat(u0: &SpectralField, times: &[f64]) -> EvolutionTrace {
        crate::semigroup::semigroup_trace(u0, times, 1.0).unwrap()
    }

    #[test]
    fn zero_trace_and_monotone_extension() {
        let g = Grid::new(2, 16).unwrap();
        let cfg = SolverConfig::default();
        let times: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
        let z = heat(&SpectralField::zeros(&g, 2), &times);
        assert_eq!(continuation_functional(&z, &cfg).unwrap(), 0.0);
        let tr = heat(&shear(&g, 2, 1.0), &times);
        let sys = Systems::new(&g);
        let s = continuation_series(&tr, &cfg, &sys).unwrap();
        assert_eq!(s[0], 0.0);
        assert!(s.windows(2).all(|w| w[1] >= w[0]));
        let whole = continuation_functional(&tr, &cfg).unwrap();
        assert!((whole - s[19]).abs() <= 1e-14 * whole);
    }

    #[test]
    fn single_mode_accumulation_matches_scalar_quadrature() {
        // u = (cos 2y, 0) e^{−4t}: one dyadic shell. The metric is the max of
        // two L̃^γ norms of the scalar profile e^{√t·2 − 4t}·‖Δ_j u₀‖₂·2^{js}.
        let g = Grid::new(2, 32).unwrap();
        let cfg = SolverConfig::default();
        let times: Vec<f64> = (0..=40).map(|i| (i as f64 / 40.0).powi(2)).collect();
        let u0 = shear(&g, 2, 1.0);
        let tr = heat(&u0, &times);
        let got = continuation_functional(&tr, &cfg).unwrap();

        let sys = Systems::new(&g);
        let mut want: f64 = 0.0;
        for spec in cfg.metric_norms(2) {
            let unweighted = NormSpec {
                gamma: None,
                weight: Some(WeightSpec::none()),
                ..spec
            };
            let base = crate::spaces::snapshot_norm(&u0, 0.0, &unweighted, &sys).unwrap();
            let profile: Vec<f64> = times
                .iter()
                .map(|&t| base * (2.0 * t.sqrt() - 4.0 * t).exp())
                .collect();
            want = want.max(time_norm(&profile, &times, spec.gamma.unwrap().0).unwrap());
        }
        assert!((got - want).abs() < 1e-8 * want, "{got} vs {want}");
    }

    #[test]
    fn heat_scaling_is_exact() {
        let g = Grid::new(2, 32).unwrap();
        let u0 = shear(&g, 2, 1.0).add(&shear(&g, 3, 0.5)).unwrap();
        let cfg = SolverConfig {
            nonlinear: false,
            t_end: 0.1,
            dt: 0.01,
            ..Default::default()
        };
        assert_eq!(scaling_symmetry_check(&u0, 1, &cfg).unwrap(), 0.0);
        assert!(scaling_symmetry_check(&u0, 2, &cfg).unwrap() < 1e-8);
        assert!(scaling_symmetry_check(&u0, 8, &cfg).unwrap_err().is_validation());
    }
}
