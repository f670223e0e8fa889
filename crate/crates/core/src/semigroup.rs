//! The fractional heat semigroup `U_{2α}(t) = e^{−t(−Δ)^α}`, the Duhamel
//! operator, and block-decay measurements.

use serde::Serialize;

use crate::decomposition::Block;
use crate::error::{Error, Result};
use crate::spaces::norms::{l1_symbol, OVERFLOW_GUARD};
use crate::spaces::{trace_norm, EvolutionTrace, NormSpec, Systems, WeightSpec};
use crate::spectral::ops::apply_real_table;
use crate::spectral::{Grid, SpectralField};

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} is outside [1/2, 1]")));
    }
    Ok(())
}

/// `|ξ|^{2α}` per lattice index.
pub fn dissipation_symbol(grid: &Grid, alpha: f64) -> Vec<f64> {
    grid.symbol_table(|xi| xi.iter().map(|x| x * x).sum::<f64>().powf(alpha))
}

pub fn apply_semigroup(u0: &SpectralField, t: f64, alpha: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("{t} is not a finite time >= 0")));
    }
    if t == 0.0 {
        return Ok(u0.clone());
    }
    let lam = dissipation_symbol(u0.grid(), alpha);
    let table: Vec<f64> = lam.iter().map(|l| (-t * l).exp()).collect();
    apply_real_table(u0, &table)
}

/// `φ₁(z) = (e^z − 1)/z` and `φ₂(z) = (e^z − 1 − z)/z²`, accurate for all `z ≤ 0`.
pub fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 0.25 {
        // Taylor: φ₁ = Σ z^k/(k+1)!, φ₂ = Σ z^k/(k+2)!
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        let mut term1 = 1.0;
        let mut term2 = 0.5;
        for k in 0..16 {
            p1 += term1;
            p2 += term2;
            term1 *= z / (k + 2) as f64;
            term2 *= z / (k + 3) as f64;
        }
        (p1, p2)
    } else {
        let em1 = z.exp_m1();
        (em1 / z, (em1 - z) / (z * z))
    }
}

/// `∫_a^b e^{−(b−τ)λ} f(τ) dτ` for `f` linear from `fa` to `fb`, per mode.
fn segment(lam: &[f64], h: f64, fa: &SpectralField, fb: &SpectralField) -> SpectralField {
    let mut out = fa.clone();
    let len = lam.len();
    for c in 0..fa.components() {
        for idx in 0..len {
            let (p1, p2) = phi12(-h * lam[idx]);
            let a = fa.coeff(c, idx);
            let b = fb.coeff(c, idx);
            out.coeffs_mut()[c * len + idx] = (a * p1 + (b - a) * p2) * h;
        }
    }
    out
}

fn decay(lam: &[f64], h: f64, f: &SpectralField) -> SpectralField {
    let table: Vec<f64> = lam.iter().map(|l| (-h * l).exp()).collect();
    apply_real_table(f, &table).expect("finite decay factors")
}

fn check_coverage(forcing: &EvolutionTrace, t: f64) -> Result<()> {
    let times = forcing.times();
    let (start, end) = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => {
            return Err(Error::Coverage {
                start: f64::NAN,
                end: f64::NAN,
                requested: t,
            })
        }
    };
    if start > 0.0 || end < t || (t > 0.0 && times.len() < 2) {
        return Err(Error::Coverage {
            start,
            end,
            requested: t,
        });
    }
    Ok(())
}

fn interpolate(forcing: &EvolutionTrace, t: f64) -> Result<SpectralField> {
    let times = forcing.times();
    let i = times.partition_point(|&x| x <= t);
    if i == 0 {
        return Ok(forcing.state(0).clone());
    }
    if i == times.len() || times[i - 1] == t {
        return Ok(forcing.state(i - 1).clone());
    }
    let (a, b) = (times[i - 1], times[i]);
    let w = (t - a) / (b - a);
    forcing.state(i - 1).scaled(1.0 - w).axpy(w, forcing.state(i))
}

/// `∫_0^t U_{2α}(t−τ) f(τ) dτ` for the piecewise-linear interpolant of the
/// forcing trace, integrated exactly mode by mode.
pub fn duhamel(forcing: &EvolutionTrace, t: f64, alpha: f64) -> Result<SpectralField> {
    check_alpha(alpha)?;
    if !(t >= 0.0) {
        return Err(Error::param("t", format!("{t} < 0")));
    }
    check_coverage(forcing, t)?;
    let first = forcing.state(0);
    let mut acc = SpectralField::zeros(first.grid(), first.components());
    if t == 0.0 {
        return Ok(acc);
    }
    let lam = dissipation_symbol(first.grid(), alpha);
    let times = forcing.times();
    // interval [t0, t] where t0 = 0 is the first node (coverage guarantees t0 <= 0)
    let mut prev_t = 0.0;
    let mut prev_f = interpolate(forcing, 0.0)?;
    for (i, &ti) in times.iter().enumerate() {
        if ti <= 0.0 {
            continue;
        }
        let (next_t, next_f) = if ti >= t {
            (t, interpolate(forcing, t)?)
        } else {
            (ti, forcing.state(i).clone())
        };
        let h = next_t - prev_t;
        acc = decay(&lam, h, &acc).add(&segment(&lam, h, &prev_f, &next_f))?;
        prev_t = next_t;
        prev_f = next_f;
        if next_t >= t {
            break;
        }
    }
    Ok(acc)
}

/// `(𝒜f)(t_i)` at every node of a forcing trace starting at 0.
pub fn duhamel_trace(forcing: &EvolutionTrace, alpha: f64) -> Result<EvolutionTrace> {
    check_alpha(alpha)?;
    let times = forcing.times();
    if times.first() != Some(&0.0) {
        return Err(Error::Coverage {
            start: times.first().copied().unwrap_or(f64::NAN),
            end: times.last().copied().unwrap_or(f64::NAN),
            requested: 0.0,
        });
    }
    let first = forcing.state(0);
    let lam = dissipation_symbol(first.grid(), alpha);
    let mut acc = SpectralField::zeros(first.grid(), first.components());
    let mut out = EvolutionTrace::new();
    out.push(0.0, acc.clone())?;
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        acc = decay(&lam, h, &acc).add(&segment(&lam, h, forcing.state(i - 1), forcing.state(i)))?;
        out.push(times[i], acc.clone())?;
    }
    Ok(out)
}

/// Which block a decay measurement refers to.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockId {
    Dyadic(i32),
    Uniform(Vec<i64>),
}

impl BlockId {
    pub fn label(&self) -> String {
        match self {
            BlockId::Dyadic(j) => format!("j={j}"),
            BlockId::Uniform(k) => {
                let parts: Vec<String> = k.iter().map(|v| v.to_string()).collect();
                format!("k=({})", parts.join(" "))
            }
        }
    }

    pub fn resolve<'a>(&self, sys: &'a Systems) -> Result<&'a Block> {
        match self {
            BlockId::Dyadic(j) => sys.dyadic.block(*j),
            BlockId::Uniform(k) => sys.uniform.block(k),
        }
    }

    /// Smallest `|ξ|` the block can carry.
    pub fn inner_radius(&self, n_dims: usize) -> f64 {
        match self {
            BlockId::Dyadic(j) => 2f64.powi(j - 1),
            BlockId::Uniform(k) => {
                let r = k.iter().map(|v| (v * v) as f64).sum::<f64>().sqrt();
                (r - 0.75 * (n_dims as f64).sqrt()).max(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayProfile {
    pub measured: f64,
    pub bound_rate: f64,
}

/// `‖block U(t) f‖_∞ / ‖block f‖_∞` against `e^{−t r^{2α}}`, `r` the block's
/// inner radius.
pub fn block_decay_profile(
    f: &SpectralField,
    id: &BlockId,
    t: f64,
    alpha: f64,
    sys: &Systems,
) -> Result<DecayProfile> {
    Ok(block_decay_profiles(f, std::slice::from_ref(id), t, alpha, sys)?.remove(0))
}

/// [`block_decay_profile`] for several blocks sharing one evolution.
pub fn block_decay_profiles(
    f: &SpectralField,
    ids: &[BlockId],
    t: f64,
    alpha: f64,
    sys: &Systems,
) -> Result<Vec<DecayProfile>> {
    let evolved = apply_semigroup(f, t, alpha)?;
    ids.iter()
        .map(|id| {
            let block = id.resolve(sys)?;
            let r = id.inner_radius(f.grid().n_dims());
            let bound_rate = (-t * r.powf(2.0 * alpha)).exp();
            let base = block.lp_norm(f, f64::INFINITY)?;
            if base == 0.0 {
                return Err(Error::RejectedInput(format!(
                    "field has no content in block {}",
                    id.label()
                )));
            }
            let measured = block.lp_norm(&evolved, f64::INFINITY)? / base;
            Ok(DecayProfile {
                measured,
                bound_rate,
            })
        })
        .collect()
}

/// CSV with columns `block,t,measured,bound`.
pub fn decay_csv(rows: &[(BlockId, f64, DecayProfile)]) -> String {
    let mut out = String::from("block,t,measured,bound\n");
    for (id, t, d) in rows {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e}\n",
            id.label(),
            t,
            d.measured,
            d.bound_rate
        ));
    }
    out
}

/// Largest `−t|ξ|^{2α} + w(t)|ξ|₁` over the lattice and the given times.
pub fn combined_log_symbol_max(grid: &Grid, times: &[f64], alpha: f64, weight: &WeightSpec) -> f64 {
    let lam = dissipation_symbol(grid, alpha);
    let l1 = l1_symbol(grid);
    let mut worst = f64::NEG_INFINITY;
    for &t in times {
        let w = if weight.is_lambda() { weight.exponent(t) } else { 0.0 };
        for (l, r) in lam.iter().zip(&l1) {
            worst = worst.max(-t * l + w * r);
        }
    }
    worst
}

/// `U_{2α}(t)u₀` sampled on `t_grid`.
pub fn semigroup_trace(u0: &SpectralField, t_grid: &[f64], alpha: f64) -> Result<EvolutionTrace> {
    check_alpha(alpha)?;
    let lam = dissipation_symbol(u0.grid(), alpha);
    let states = t_grid
        .iter()
        .map(|&t| {
            let table: Vec<f64> = lam.iter().map(|l| (-t * l).exp()).collect();
            apply_real_table(u0, &table)
        })
        .collect::<Result<Vec<_>>>()?;
    EvolutionTrace::from_parts(t_grid.to_vec(), states)
}

/// Chemin–Lerner-type norm of `e^{w(t)Λ} U_{2α}(t) u₀` over `t_grid`.
pub fn weighted_semigroup_norm(
    u0: &SpectralField,
    t_grid: &[f64],
    alpha: f64,
    weight: &WeightSpec,
    norm: &NormSpec,
    sys: &Systems,
) -> Result<f64> {
    check_alpha(alpha)?;
    weight.validate()?;
    if weight.is_lambda() && !weight.is_trivial() {
        let want = 1.0 / (2.0 * alpha);
        if (weight.time_power() - want).abs() > 1e-12 {
            return Err(Error::param(
                "weight.power",
                format!("t^{} does not match 1/(2α) = {want}", weight.time_power()),
            ));
        }
        let worst = combined_log_symbol_max(u0.grid(), t_grid, alpha, weight);
        if worst > OVERFLOW_GUARD {
            return Err(Error::UnstableWeight {
                exponent: worst,
                guard: OVERFLOW_GUARD,
            });
        }
    }
    let tr = semigroup_trace(u0, t_grid, alpha)?;
    let spec = NormSpec {
        weight: Some(*weight),
        ..*norm
    };
    trace_norm(&tr, &spec, sys)
}
