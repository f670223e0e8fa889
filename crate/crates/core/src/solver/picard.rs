use rayon::prelude::*;
use serde::Serialize;

use super::config::SolverConfig;
use super::smallness::smallness_check;
use crate::error::{Error, Result};
use crate::semigroup::{duhamel_trace, semigroup_trace};
use crate::spaces::{trace_norm, EvolutionTrace, NormSpec, Systems};
use crate::spectral::ops::{nonlinear_bilinear, nonlinear_term};
use crate::spectral::SpectralField;

/// Successive distances of Picard iterates and the last iterate.
#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub iterate_distances: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    /// Distance increased three times in a row.
    pub diverged: bool,
    #[serde(skip)]
    pub final_trace: EvolutionTrace,
}

/// Max over `norms` of the trace norm; the Picard metric.
pub fn metric_distance(tr: &EvolutionTrace, norms: &[NormSpec], sys: &Systems) -> Result<f64> {
    let mut d: f64 = 0.0;
    for n in norms {
        d = d.max(trace_norm(tr, n, sys)?);
    }
    Ok(d)
}

fn check_datum(u0: &SpectralField) -> Result<()> {
    if u0.components() != u0.grid().n_dims() {
        return Err(Error::RejectedInput(format!(
            "datum has {} components on a {}D grid",
            u0.components(),
            u0.grid().n_dims()
        )));
    }
    let div = u0.divergence_defect();
    if div > crate::spectral::field::DIVERGENCE_TOL {
        return Err(Error::RejectedInput(format!("datum divergence {div:e} exceeds 1e-10")));
    }
    let scale = u0.max_abs().max(1.0);
    for c in 0..u0.components() {
        if u0.mean(c).abs() > 1e-14 * scale {
            return Err(Error::RejectedInput(format!("component {c} has nonzero mean")));
        }
    }
    Ok(())
}

/// Shared preconditions of the Picard and stepper paths.
pub(crate) fn check_preconditions(u0: &SpectralField, cfg: &SolverConfig, sys: &Systems) -> Result<()> {
    cfg.validate()?;
    check_datum(u0)?;
    if !cfg.override_smallness {
        let s = smallness_check(u0, cfg, sys)?;
        if !s.pass {
            return Err(Error::validation(
                "solver.override_smallness",
                format!(
                    "datum norm {:e} exceeds the smallness threshold {:e}; set the override to proceed",
                    s.norm, s.threshold
                ),
            ));
        }
    }
    Ok(())
}

/// `−P div(u⊗u)` at every sample, in parallel.
fn forcing(tr: &EvolutionTrace) -> Result<EvolutionTrace> {
    let states = tr
        .states()
        .par_iter()
        .map(|u| Ok(nonlinear_term(u)?.scaled(-1.0)))
        .collect::<Result<Vec<_>>>()?;
    EvolutionTrace::from_parts(tr.times().to_vec(), states)
}

/// `−(N(u) − N(v)) = −B(u − v, u + v)` at every sample, from `w = u − v`.
fn forcing_increment(w: &EvolutionTrace, u: &EvolutionTrace, v: &EvolutionTrace) -> Result<EvolutionTrace> {
    let states = w
        .states()
        .par_iter()
        .zip(u.states().par_iter().zip(v.states().par_iter()))
        .map(|(w, (a, b))| Ok(nonlinear_bilinear(w, &a.add(b)?)?.scaled(-1.0)))
        .collect::<Result<Vec<_>>>()?;
    EvolutionTrace::from_parts(w.times().to_vec(), states)
}

fn trace_sum(a: &EvolutionTrace, b: &EvolutionTrace) -> Result<EvolutionTrace> {
    let states = a
        .states()
        .iter()
        .zip(b.states())
        .map(|(x, y)| x.add(y))
        .collect::<Result<Vec<_>>>()?;
    EvolutionTrace::from_parts(a.times().to_vec(), states)
}

/// One application of `𝒯u = U(t)u₀ − 𝒜 P div(u⊗u)`, given `U(t)u₀`.
pub fn picard_map(free: &EvolutionTrace, u: &EvolutionTrace, alpha: f64) -> Result<EvolutionTrace> {
    trace_sum(free, &duhamel_trace(&forcing(u)?, alpha)?)
}

fn finite_trace(tr: &EvolutionTrace) -> Result<()> {
    for (t, s) in tr.times().iter().zip(tr.states()) {
        if !s.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::Unstable(format!("Picard iterate is not finite at t = {t}")));
        }
    }
    Ok(())
}

pub fn picard_solve(u0: &SpectralField, cfg: &SolverConfig) -> Result<PicardReport> {
    let sys = Systems::new(u0.grid());
    picard_solve_with(u0, cfg, &sys, None)
}

/// Picard iteration from `U(t)u₀`, or from `guess` when given (it must be
/// sampled on the configured times).
pub fn picard_solve_with(
    u0: &SpectralField,
    cfg: &SolverConfig,
    sys: &Systems,
    guess: Option<&EvolutionTrace>,
) -> Result<PicardReport> {
    check_preconditions(u0, cfg, sys)?;
    let times = cfg.picard_times();
    let free = semigroup_trace(u0, &times, cfg.alpha)?;
    let mut current = match guess {
        Some(g) => {
            if g.times() != times.as_slice() {
                return Err(Error::RejectedInput(
                    "initial guess is not sampled on the Picard times".into(),
                ));
            }
            g.clone()
        }
        None => free.clone(),
    };
    let norms = cfg.metric_norms(u0.grid().n_dims());
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    let mut increases = 0;
    let mut diverged = false;
    let mut converged = false;
    // Iterates advance by increments 𝒯u_k − 𝒯u_{k−1} = −𝒜B(u_k − u_{k−1}, u_k + u_{k−1}),
    // never by subtracting whole iterates: the exponential weights of the
    // metric would otherwise amplify rounding of |u|² far above the increment.
    let mut previous: Option<EvolutionTrace> = None;
    let mut step: Option<EvolutionTrace> = None;
    for _ in 0..cfg.n_picard {
        let inc = if !cfg.nonlinear {
            free.difference(&current)?
        } else {
            match (&previous, &step) {
                (Some(p), Some(w)) => duhamel_trace(&forcing_increment(w, &current, p)?, cfg.alpha)?,
                _ if guess.is_none() => duhamel_trace(&forcing(&current)?, cfg.alpha)?,
                _ => picard_map(&free, &current, cfg.alpha)?.difference(&current)?,
            }
        };
        let next = trace_sum(&current, &inc)?;
        finite_trace(&next)?;
        let d = metric_distance(&inc, &norms, sys)?;
        let size = metric_distance(&next, &norms, sys)?;
        if !(d.is_finite() && size.is_finite()) {
            return Err(Error::Unstable(format!("Picard distance {d} is not finite")));
        }
        if let Some(&prev) = distances.last() {
            ratios.push(if prev > 0.0 { d / prev } else { 0.0 });
            increases = if d > prev { increases + 1 } else { 0 };
        }
        distances.push(d);
        previous = Some(std::mem::replace(&mut current, next));
        step = Some(inc);
        converged = d <= cfg.picard_tol * size;
        if increases >= 3 {
            diverged = true;
            converged = false;
            log::warn!("Picard distances increased three times in a row; stopping");
            break;
        }
        if d <= 1e-13 * size || d == 0.0 {
            break;
        }
    }
    Ok(PicardReport {
        iterate_distances: distances,
        contraction_ratios: ratios,
        converged,
        diverged,
        final_trace: current,
    })
}

/// One interval of a restart schedule.
#[derive(Debug, Clone, Serialize)]
pub struct RestartInterval {
    pub start: f64,
    pub end: f64,
    /// `δ_m = 1/(4 C_emp 2^{8c})`.
    pub delta: f64,
    /// Metric norm of the interval's final iterate.
    pub metric_norm: f64,
    pub within_ball: bool,
    pub report: PicardReport,
}

/// Extends a solution interval by interval: Picard on `[t_m, t_{m+1}]` from
/// `u(t_m)`, each in local time, with the ball radius `1/(4 C_emp 2^{8c})`
/// of the bootstrap step. `breakpoints` must start at 0 and increase.
pub fn restart_schedule(
    u0: &SpectralField,
    cfg: &SolverConfig,
    breakpoints: &[f64],
    sys: &Systems,
) -> Result<Vec<RestartInterval>> {
    let c_emp = cfg.calibration_constant.ok_or_else(|| {
        Error::validation("solver.calibration_constant", "a restart schedule needs C_emp")
    })?;
    if breakpoints.len() < 2 || breakpoints[0] != 0.0 || breakpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation(
            "breakpoints",
            "must start at 0 and increase strictly",
        ));
    }
    let rate = super::config::MODULATION_RATE;
    let delta = 1.0 / (4.0 * c_emp * 2f64.powf(8.0 * rate));
    let norms = cfg.metric_norms(u0.grid().n_dims());
    let mut datum = u0.clone();
    let mut out = Vec::new();
    for (m, w) in breakpoints.windows(2).enumerate() {
        let local = SolverConfig {
            t_end: w[1] - w[0],
            override_smallness: cfg.override_smallness || m > 0,
            ..cfg.clone()
        };
        let report = picard_solve_with(&datum, &local, sys, None)?;
        let metric_norm = metric_distance(&report.final_trace, &norms, sys)?;
        datum = report.final_trace.last().expect("nonempty").1.clone();
        out.push(RestartInterval {
            start: w[0],
            end: w[1],
            delta,
            metric_norm,
            within_ball: metric_norm <= delta,
            report,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use num_complex::Complex64;

    fn taylor_green(grid: &Grid, a: f64) -> SpectralField {
        // u = a(sin x cos y, −cos x sin y)
        let mut u = SpectralField::zeros(grid, 2);
        let q = Complex64::new(0.0, -a / 4.0);
        for (sx, sy) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let s = sx as f64;
            u.set_coeff_at(0, &[sx, sy], q * s).unwrap();
            u.set_coeff_at(1, &[sx, sy], -q * (sy as f64)).unwrap();
        }
        u.mark_divergence_free().unwrap();
        u
    }

    fn cfg() -> SolverConfig {
        SolverConfig {
            override_smallness: true,
            ..Default::default()
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let g = Grid::new(2, 16).unwrap();
        let u0 = SpectralField::zeros(&g, 2);
        let r = picard_solve(&u0, &SolverConfig::default()).unwrap();
        assert!(r.converged && !r.diverged);
        assert!(r.iterate_distances.iter().all(|&d| d == 0.0));
        assert!(r.final_trace.states().iter().all(|s| s.max_abs() == 0.0));
    }

    #[test]
    fn taylor_green_first_iterate_is_exact() {
        let g = Grid::new(2, 32).unwrap();
        let u0 = taylor_green(&g, 1.0);
        let mut c = cfg();
        c.n_picard = 2;
        let r = picard_solve(&u0, &c).unwrap();
        for (&t, s) in r.final_trace.times().iter().zip(r.final_trace.states()) {
            let exact = u0.scaled((-2.0 * t).exp());
            let err = s.sub(&exact).unwrap().l2_norm() / exact.l2_norm();
            assert!(err < 1e-6, "t = {t}: {err:e}");
        }
        assert!(r.converged);
    }

    #[test]
    fn restarts_continue_the_heat_flow() {
        let g = Grid::new(2, 16).unwrap();
        let u0 = taylor_green(&g, 1e-3);
        let c = SolverConfig {
            metric: Some(crate::solver::PicardMetric::Modulation),
            calibration_constant: Some(1.0),
            override_smallness: true,
            picard_time_samples: 17,
            ..Default::default()
        };
        let sys = Systems::new(&g);
        let r = restart_schedule(&u0, &c, &[0.0, 0.5, 1.0], &sys).unwrap();
        assert_eq!(r.len(), 2);
        let end = r[1].report.final_trace.last().unwrap().1;
        let want = u0.scaled((-2.0f64).exp());
        assert!(end.sub(&want).unwrap().l2_norm() < 1e-9 * want.l2_norm());
        assert!(r.iter().all(|i| i.within_ball));
    }

    #[test]
    fn rejects_divergent_datum() {
        let g = Grid::new(2, 16).unwrap();
        let mut u0 = SpectralField::zeros(&g, 2);
        u0.set_coeff_at(0, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        u0.set_coeff_at(0, &[-1, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(picard_solve(&u0, &cfg()), Err(Error::RejectedInput(_))));
    }
}
