//! Gevrey-norm monitors, Fourier-decay radius fits and the radius growth law.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::semigroup::check_alpha;
use crate::solver::picard::check_preconditions;
use crate::solver::{step_solve_with, SolverConfig};
use crate::spaces::gevrey::line_fit;
use crate::spaces::{snapshot_norm, EvolutionTrace, NormSpec, Systems, WeightSpec};
use crate::spectral::SpectralField;

/// Default fit window, relative to the peak shell amplitude.
pub const WINDOW_FLOOR: f64 = 1e-13;
pub const WINDOW_CEILING: f64 = 1e-3;

/// Closed `|ξ|₁` range of shells used in a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusFit {
    pub t: f64,
    /// Decay rate of the shell maxima in the `|ξ|₁` metric.
    pub radius: f64,
    pub fit_residual: f64,
    pub frequency_window: FitWindow,
}

/// `(|ξ|₁, max |f̂|)` for every nonzero `ℓ¹` shell inside the 2/3 band,
/// ascending. Vector fields use the Euclidean magnitude per mode.
pub fn shell_maxima(f: &SpectralField) -> Vec<(f64, f64)> {
    let grid = f.grid();
    let n = grid.n_dims();
    let cut = grid.dealias_cutoff();
    let mut shells: BTreeMap<i64, f64> = BTreeMap::new();
    for idx in 0..grid.len() {
        let m = grid.mode(idx);
        if m.is_zero() || m.is_nyquist() {
            continue;
        }
        let r: i64 = m.k[..n].iter().map(|k| k.abs()).sum();
        if r > cut {
            continue;
        }
        let amp = (0..f.components())
            .map(|c| f.coeff(c, idx).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let e = shells.entry(r).or_insert(0.0);
        *e = e.max(amp);
    }
    let s = grid.scale();
    shells.into_iter().map(|(r, a)| (r as f64 * s, a)).collect()
}

/// Shells whose amplitude lies within `[1e−13, 1e−3]` of the peak.
pub fn default_window(shells: &[(f64, f64)]) -> Option<FitWindow> {
    let peak = shells.iter().fold(0.0f64, |a, s| a.max(s.1));
    if peak == 0.0 {
        return None;
    }
    let inside: Vec<f64> = shells
        .iter()
        .filter(|(_, a)| *a >= WINDOW_FLOOR * peak && *a <= WINDOW_CEILING * peak)
        .map(|s| s.0)
        .collect();
    Some(FitWindow {
        min: *inside.first()?,
        max: *inside.last()?,
    })
}

pub fn radius_fit(f: &SpectralField, window: Option<FitWindow>) -> Result<RadiusFit> {
    radius_fit_at(f, 0.0, window)
}

/// Least-squares fit of `log max_{|ξ|₁=r}|f̂|` against `−radius·r` over the
/// window (default: [`default_window`]).
pub fn radius_fit_at(f: &SpectralField, t: f64, window: Option<FitWindow>) -> Result<RadiusFit> {
    let shells = shell_maxima(f);
    let top = f.grid().dealias_cutoff() as f64 * f.grid().scale();
    let w = match window {
        Some(w) => {
            if !(w.min <= w.max && w.min >= 0.0 && w.max <= top * (1.0 + 1e-12)) {
                return Err(Error::param(
                    "window",
                    format!("[{}, {}] is not inside the active band [0, {top}]", w.min, w.max),
                ));
            }
            w
        }
        None => default_window(&shells).ok_or_else(|| {
            Error::UndefinedRadius("no shell lies within the default amplitude window".into())
        })?,
    };
    let (x, y): (Vec<f64>, Vec<f64>) = shells
        .iter()
        .filter(|(r, a)| *r >= w.min && *r <= w.max && *a > 0.0)
        .map(|(r, a)| (*r, a.ln()))
        .unzip();
    if x.len() < 2 {
        return Err(Error::UndefinedRadius(format!(
            "{} nonzero shell(s) in [{}, {}]; a fit needs two",
            x.len(),
            w.min,
            w.max
        )));
    }
    let (slope, _, residual) = line_fit(&x, &y);
    Ok(RadiusFit {
        t,
        radius: (-slope).max(0.0),
        fit_residual: residual,
        frequency_window: w,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    pub values: Vec<f64>,
    /// First time the value exceeds twice its initial value.
    pub alarm_time: Option<f64>,
}

/// Rate `c` of the analyticity weight the small-data theory bounds:
/// `1/(2n)` at `α = 1/2` (`e^{tΛ/2n}`), otherwise 1 (`e^{t^{1/2α}Λ}`).
pub fn theorem_rate(alpha: f64, n_dims: usize) -> f64 {
    if (alpha - 0.5).abs() < 1e-15 {
        1.0 / (2.0 * n_dims as f64)
    } else {
        1.0
    }
}

/// `‖e^{c t^{1/2α}Λ} u(t)‖` at every sample of the trace, in `norm`'s
/// space (its own weight, if set, must match `α`).
pub fn gevrey_norm_monitor(
    tr: &EvolutionTrace,
    alpha: f64,
    rate: f64,
    norm: &NormSpec,
) -> Result<MonitorReport> {
    check_alpha(alpha)?;
    let grid = tr
        .grid()
        .ok_or_else(|| Error::RejectedInput("empty trace".into()))?;
    let weight = match norm.weight {
        Some(w) if !w.is_trivial() => {
            if w.is_lambda() && (w.time_power() - 1.0 / (2.0 * alpha)).abs() > 1e-12 {
                return Err(Error::param(
                    "weight.power",
                    format!("t^{} does not match 1/(2α)", w.time_power()),
                ));
            }
            w
        }
        _ => WeightSpec::for_alpha(alpha, rate),
    };
    weight.validate()?;
    let spec = NormSpec {
        weight: Some(weight),
        gamma: None,
        ..*norm
    };
    let sys = Systems::new(grid);
    let values = tr
        .times()
        .par_iter()
        .zip(tr.states().par_iter())
        .map(|(&t, s)| snapshot_norm(s, t, &spec, &sys))
        .collect::<Result<Vec<_>>>()?;
    let v0 = values[0];
    let alarm_time = values
        .iter()
        .position(|&v| v > 2.0 * v0)
        .map(|i| tr.times()[i]);
    Ok(MonitorReport { values, alarm_time })
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub exponent: f64,
    pub per_time: Vec<RadiusFit>,
    /// Requested times dropped after the radius became undefined.
    pub dropped_times: Vec<f64>,
    pub solver_config_digest: String,
    #[serde(skip)]
    pub trace: EvolutionTrace,
}

pub fn config_digest(cfg: &SolverConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Advances `u` by `span` with the stepper, returning the final state.
fn advance(u: &SpectralField, span: f64, cfg: &SolverConfig, sys: &Systems) -> Result<SpectralField> {
    let steps = (span / cfg.dt).ceil().max(1.0);
    let local = SolverConfig {
        t_end: span,
        dt: span / steps,
        override_smallness: true,
        record_every: usize::MAX,
        continuation_norms: Vec::new(),
        ..cfg.clone()
    };
    let tr = step_solve_with(u, &local, sys)?;
    Ok(tr.last().expect("nonempty").1.clone())
}

/// `count` geometric times from `t₀ = min(1/2, 2 ln(10³)/cut^{2α})` to 1,
/// `cut` the 2/3-band `ℓ¹` radius: from `t₀` on, `e^{−t|ξ|^{2α}}` falls
/// below the window ceiling inside the band, so every radius is defined.
pub fn growth_times(grid: &crate::spectral::Grid, alpha: f64, count: usize) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if count < 2 {
        return Err(Error::validation("radius.count", format!("{count} is below 2")));
    }
    let cut = grid.dealias_cutoff() as f64 * grid.scale();
    let t0 = (2.0 * (1.0 / WINDOW_CEILING).ln() / cut.powf(2.0 * alpha)).min(0.5);
    let mut ts: Vec<f64> = (0..count)
        .map(|i| t0 * (1.0 / t0).powf(i as f64 / (count - 1) as f64))
        .collect();
    *ts.last_mut().expect("count >= 2") = 1.0;
    Ok(ts)
}

/// Solves from `u0`, fits the radius at every `t` in `t_list` and returns
/// the slope of `log radius` against `log t`.
pub fn radius_growth_experiment(
    u0: &SpectralField,
    alpha: f64,
    t_list: &[f64],
    cfg: &SolverConfig,
) -> Result<GrowthReport> {
    let cfg = SolverConfig {
        alpha,
        ..cfg.clone()
    };
    if t_list.is_empty() || t_list.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::validation("t_list", "times must lie in (0, 1]"));
    }
    if t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("t_list", "times must increase strictly"));
    }
    let sys = Systems::new(u0.grid());
    if cfg.nonlinear {
        check_preconditions(u0, &cfg, &sys)?;
    } else {
        cfg.validate()?;
    }
    let mut u = u0.clone();
    let mut now = 0.0;
    let mut per_time = Vec::new();
    let mut dropped = Vec::new();
    let mut trace = EvolutionTrace::new();
    for (i, &t) in t_list.iter().enumerate() {
        u = advance(&u, t - now, &cfg, &sys)?;
        now = t;
        match radius_fit_at(&u, t, None) {
            Ok(fit) => {
                per_time.push(fit);
                trace.push(t, u.clone())?;
            }
            Err(Error::UndefinedRadius(msg)) => {
                log::warn!("radius undefined at t = {t} ({msg}); truncating the time list");
                dropped = t_list[i..].to_vec();
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if per_time.len() < 2 {
        return Err(Error::UndefinedRadius(format!(
            "only {} time(s) with a defined radius",
            per_time.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = per_time
        .iter()
        .map(|f| (f.t.ln(), f.radius.ln()))
        .unzip();
    let (exponent, _, _) = line_fit(&x, &y);
    Ok(GrowthReport {
        exponent,
        per_time,
        dropped_times: dropped,
        solver_config_digest: config_digest(&cfg)?,
        trace,
    })
}

/// `t, radius, residual, window_min, window_max`.
pub fn radius_report_csv(fits: &[RadiusFit]) -> String {
    let mut out = String::from("t,radius,residual,window_min,window_max\n");
    for f in fits {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            f.t, f.radius, f.fit_residual, f.frequency_window.min, f.frequency_window.max
        ));
    }
    out
}
