use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use super::spec::{Exponent, FreqMetric, NormFamily, NormSpec, WeightSpec};
use super::trace::EvolutionTrace;
use crate::decomposition::{build_dyadic, build_uniform, Block, DyadicSystem, UniformSystem};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Largest admissible natural-log growth of any weighted coefficient.
pub const OVERFLOW_GUARD: f64 = 50.0;

/// The two block systems every norm is built from.
#[derive(Debug, Clone)]
pub struct Systems {
    pub dyadic: DyadicSystem,
    pub uniform: UniformSystem,
}

impl Systems {
    pub fn new(grid: &Grid) -> Self {
        Systems {
            dyadic: build_dyadic(grid, 0),
            uniform: build_uniform(grid),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.dyadic.grid()
    }
}

/// `|ξ|₁` per lattice index (Nyquist-averaged, which is exact here).
pub fn l1_symbol(grid: &Grid) -> Vec<f64> {
    grid.symbol_table(|xi| xi.iter().map(|x| x.abs()).sum())
}

/// Log-weights `w|ξ|₁` of `e^{wΛ}` after checking that no nonzero
/// coefficient of `f` grows past the guard relative to the largest one.
pub fn lambda_log_weights(f: &SpectralField, w: f64, l1: &[f64]) -> Result<Vec<f64>> {
    let logs: Vec<f64> = l1.iter().map(|r| w * r).collect();
    if w == 0.0 {
        return Ok(logs);
    }
    let top = f.max_abs();
    if top == 0.0 {
        return Ok(logs);
    }
    let len = f.grid().len();
    let mut worst = f64::NEG_INFINITY;
    for c in 0..f.components() {
        for idx in 0..len {
            let a = f.coeff(c, idx).norm();
            if a > 0.0 {
                worst = worst.max(logs[idx] + (a / top).ln());
            }
        }
    }
    if worst > OVERFLOW_GUARD {
        return Err(Error::UnstableWeight {
            exponent: worst,
            guard: OVERFLOW_GUARD,
        });
    }
    Ok(logs)
}

/// `log (Σ e^{q L_i})^{1/q}` over finite `L_i`; `q = ∞` is the max; `−∞` when empty.
pub fn log_lq(logs: impl Iterator<Item = f64>, q: f64) -> f64 {
    let v: Vec<f64> = logs.filter(|l| *l > f64::NEG_INFINITY).collect();
    let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if v.is_empty() || q.is_infinite() {
        return top;
    }
    let s: f64 = v.iter().map(|l| (q * (l - top)).exp()).sum();
    top + s.ln() / q
}

fn safe_ln(v: f64) -> f64 {
    if v > 0.0 {
        v.ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn exp_or_zero(l: f64) -> f64 {
    if l == f64::NEG_INFINITY {
        0.0
    } else {
        l.exp()
    }
}

/// One block of a family: the cut-off, its static log-weight and the `|k|`
/// used by modulation-rate weights.
struct WeightedBlock<'a> {
    block: &'a Block,
    log_weight: f64,
    k_len: f64,
}

fn dyadic_blocks(sys: &DyadicSystem, s: f64) -> Vec<WeightedBlock<'_>> {
    sys.blocks()
        .map(|(j, b)| WeightedBlock {
            block: b,
            log_weight: j as f64 * s * LN_2,
            k_len: 0.0,
        })
        .collect()
}

fn uniform_blocks(
    sys: &UniformSystem,
    family: NormFamily,
    s: f64,
    metric: FreqMetric,
) -> Vec<WeightedBlock<'_>> {
    sys.blocks()
        .map(|(k, b)| {
            let k_len = metric.length(k);
            let log_weight = match family {
                NormFamily::Modulation => {
                    0.5 * s * (1.0 + k.iter().map(|v| (v * v) as f64).sum::<f64>()).ln()
                }
                _ => s * k_len * LN_2,
            };
            WeightedBlock {
                block: b,
                log_weight,
                k_len,
            }
        })
        .collect()
}

/// `log ‖block (weighted f(t))‖_p` for every block and time, `[block][time]`.
fn block_time_logs(
    times: &[f64],
    states: &[SpectralField],
    blocks: &[WeightedBlock<'_>],
    p: f64,
    weight: &WeightSpec,
) -> Result<Vec<Vec<f64>>> {
    let grid = states[0].grid();
    let l1 = if weight.is_lambda() && !weight.is_trivial() {
        Some(l1_symbol(grid))
    } else {
        None
    };
    let per_time: Vec<Vec<f64>> = times
        .par_iter()
        .zip(states.par_iter())
        .map(|(&t, f)| -> Result<Vec<f64>> {
            let mut logs = Vec::with_capacity(blocks.len());
            match &l1 {
                Some(l1) => {
                    let lw = lambda_log_weights(f, weight.exponent(t), l1)?;
                    for b in blocks {
                        logs.push(safe_ln(b.block.lp_norm_scaled(f, p, |i| lw[i].exp())?));
                    }
                }
                None => {
                    for b in blocks {
                        logs.push(safe_ln(b.block.lp_norm(f, p)?));
                    }
                }
            }
            if weight.is_modulation() && !weight.is_trivial() {
                let st = weight.exponent(t) * LN_2;
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for (l, b) in logs.iter_mut().zip(blocks) {
                    if *l == f64::NEG_INFINITY {
                        continue;
                    }
                    *l += st * b.k_len;
                    if *l - top > OVERFLOW_GUARD {
                        return Err(Error::UnstableWeight {
                            exponent: *l - top,
                            guard: OVERFLOW_GUARD,
                        });
                    }
                }
            }
            Ok(logs)
        })
        .collect::<Result<_>>()?;
    let nb = blocks.len();
    Ok((0..nb)
        .map(|b| per_time.iter().map(|row| row[b]).collect())
        .collect())
}

/// Log of the `L^γ` trapezoid norm of `e^{L(t)}`.
fn log_time_norm(logs: &[f64], times: &[f64], gamma: f64) -> Result<f64> {
    if gamma.is_infinite() {
        return Ok(logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    }
    if logs.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "an L^{gamma} time norm needs at least two samples, got {}",
            logs.len()
        )));
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Ok(top);
    }
    let mut acc = 0.0;
    for i in 1..logs.len() {
        let a = (gamma * (logs[i - 1] - top)).exp();
        let b = (gamma * (logs[i] - top)).exp();
        acc += 0.5 * (a + b) * (times[i] - times[i - 1]);
    }
    Ok(top + acc.ln() / gamma)
}

fn blockwise_log_norm(
    times: &[f64],
    states: &[SpectralField],
    blocks: &[WeightedBlock<'_>],
    p: Exponent,
    q: Exponent,
    gamma: f64,
    weight: &WeightSpec,
) -> Result<f64> {
    p.check("p")?;
    q.check("q")?;
    if states.is_empty() {
        return Err(Error::RejectedInput("empty trace".into()));
    }
    if !gamma.is_infinite() && states.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "an L^{gamma} time norm needs at least two samples, got 1"
        )));
    }
    let table = block_time_logs(times, states, blocks, p.0, weight)?;
    let per_block = table
        .iter()
        .zip(blocks)
        .map(|(row, b)| Ok(log_time_norm(row, times, gamma)? + b.log_weight))
        .collect::<Result<Vec<f64>>>()?;
    Ok(log_lq(per_block.into_iter(), q.0))
}

/// `‖f‖_{Ḃ^s_{p,q}} = (Σ_j 2^{jsq}‖Δ_j f‖_p^q)^{1/q}` over active shells.
pub fn besov_norm(f: &SpectralField, s: f64, p: f64, q: f64, sys: &DyadicSystem) -> Result<f64> {
    let blocks = dyadic_blocks(sys, s);
    let l = blockwise_log_norm(
        &[0.0],
        std::slice::from_ref(f),
        &blocks,
        Exponent(p),
        Exponent(q),
        f64::INFINITY,
        &WeightSpec::none(),
    )?;
    Ok(exp_or_zero(l))
}

/// `‖f‖_{L̃^γ(I; Ḃ^s_{p,q})}` of `e^{w(t)Λ} f(t)`.
pub fn chemin_lerner_norm(
    tr: &EvolutionTrace,
    gamma: f64,
    s: f64,
    p: f64,
    q: f64,
    sys: &DyadicSystem,
    weight: &WeightSpec,
) -> Result<f64> {
    Exponent(gamma).check("gamma")?;
    if weight.is_modulation() && !weight.is_trivial() {
        return Err(Error::param(
            "weight.kind",
            "modulation-rate weights act on uniform blocks, not dyadic shells",
        ));
    }
    let blocks = dyadic_blocks(sys, s);
    let l = blockwise_log_norm(
        tr.times(),
        tr.states(),
        &blocks,
        Exponent(p),
        Exponent(q),
        gamma,
        weight,
    )?;
    Ok(exp_or_zero(l))
}

/// `‖f‖_{M^s_{p,q}}` with `⟨k⟩ = (1+|k|²)^{1/2}`.
pub fn modulation_norm(f: &SpectralField, s: f64, p: f64, q: f64, sys: &UniformSystem) -> Result<f64> {
    let blocks = uniform_blocks(sys, NormFamily::Modulation, s, FreqMetric::Euclidean);
    let l = blockwise_log_norm(
        &[0.0],
        std::slice::from_ref(f),
        &blocks,
        Exponent(p),
        Exponent(q),
        f64::INFINITY,
        &WeightSpec::none(),
    )?;
    Ok(exp_or_zero(l))
}

/// Natural log of `‖f‖_{E^s_{p,q}}`; finite even where the norm overflows.
pub fn exp_modulation_log_norm(
    f: &SpectralField,
    s: f64,
    p: f64,
    q: f64,
    sys: &UniformSystem,
    metric: FreqMetric,
) -> Result<f64> {
    if !(s >= 0.0) {
        return Err(Error::param("s", format!("{s} < 0 for exp_modulation")));
    }
    let blocks = uniform_blocks(sys, NormFamily::ExpModulation, s, metric);
    blockwise_log_norm(
        &[0.0],
        std::slice::from_ref(f),
        &blocks,
        Exponent(p),
        Exponent(q),
        f64::INFINITY,
        &WeightSpec::none(),
    )
}

/// `‖f‖_{E^s_{p,q}} = (Σ_k 2^{qs|k|}‖□_k f‖_p^q)^{1/q}`.
pub fn exp_modulation_norm(
    f: &SpectralField,
    s: f64,
    p: f64,
    q: f64,
    sys: &UniformSystem,
    metric: FreqMetric,
) -> Result<f64> {
    Ok(exp_or_zero(exp_modulation_log_norm(f, s, p, q, sys, metric)?))
}

/// `(Σ_k ‖2^{s(t)|k|}□_k f(t)‖_{L^{q̃}_t L^p_x}^q)^{1/q}`.
pub fn time_exp_modulation_norm(
    tr: &EvolutionTrace,
    s_of_t: &WeightSpec,
    q_tilde: f64,
    p: f64,
    q: f64,
    sys: &UniformSystem,
    metric: FreqMetric,
) -> Result<f64> {
    Exponent(q_tilde).check("q_tilde")?;
    if !s_of_t.is_modulation() && !s_of_t.is_trivial() {
        return Err(Error::param("s_of_t", "expected a modulation-rate weight"));
    }
    let blocks = uniform_blocks(sys, NormFamily::ExpModulation, 0.0, metric);
    let l = blockwise_log_norm(
        tr.times(),
        tr.states(),
        &blocks,
        Exponent(p),
        Exponent(q),
        q_tilde,
        s_of_t,
    )?;
    Ok(exp_or_zero(l))
}

/// Time-space norm described by `spec` (γ defaults to ∞).
pub fn trace_norm(tr: &EvolutionTrace, spec: &NormSpec, sys: &Systems) -> Result<f64> {
    spec.validate()?;
    let gamma = spec.gamma.unwrap_or(Exponent::INF).0;
    let weight = spec.weight();
    let blocks = match spec.family {
        NormFamily::Besov => dyadic_blocks(&sys.dyadic, spec.s),
        fam => uniform_blocks(&sys.uniform, fam, spec.s, spec.metric),
    };
    let l = blockwise_log_norm(tr.times(), tr.states(), &blocks, spec.p, spec.q, gamma, &weight)?;
    Ok(exp_or_zero(l))
}

/// `trace_norm` of every prefix `[t_0, t_i]`, in one pass. A finite-`γ`
/// norm of a single sample is 0.
pub fn cumulative_trace_norm(tr: &EvolutionTrace, spec: &NormSpec, sys: &Systems) -> Result<Vec<f64>> {
    spec.validate()?;
    spec.p.check("p")?;
    spec.q.check("q")?;
    if tr.is_empty() {
        return Err(Error::RejectedInput("empty trace".into()));
    }
    let gamma = spec.gamma.unwrap_or(Exponent::INF).0;
    let weight = spec.weight();
    let blocks = match spec.family {
        NormFamily::Besov => dyadic_blocks(&sys.dyadic, spec.s),
        fam => uniform_blocks(&sys.uniform, fam, spec.s, spec.metric),
    };
    let table = block_time_logs(tr.times(), tr.states(), &blocks, spec.p.0, &weight)?;
    let times = tr.times();
    let n = times.len();
    // per block: running log of the time norm
    let running: Vec<Vec<f64>> = table
        .iter()
        .map(|row| {
            let mut out = Vec::with_capacity(n);
            if gamma.is_infinite() {
                let mut m = f64::NEG_INFINITY;
                for &l in row {
                    m = m.max(l);
                    out.push(m);
                }
                return out;
            }
            let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            out.push(f64::NEG_INFINITY);
            let mut acc = 0.0;
            for i in 1..n {
                if top > f64::NEG_INFINITY {
                    let a = (gamma * (row[i - 1] - top)).exp();
                    let b = (gamma * (row[i] - top)).exp();
                    acc += 0.5 * (a + b) * (times[i] - times[i - 1]);
                }
                out.push(if acc > 0.0 { top + acc.ln() / gamma } else { f64::NEG_INFINITY });
            }
            out
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let logs = running
                .iter()
                .zip(&blocks)
                .map(|(r, b)| r[i] + b.log_weight);
            exp_or_zero(log_lq(logs, spec.q.0))
        })
        .collect())
}

/// Norm of a single state at time `t` (its weight evaluated at `t`).
pub fn snapshot_norm(f: &SpectralField, t: f64, spec: &NormSpec, sys: &Systems) -> Result<f64> {
    spec.validate()?;
    let weight = spec.weight();
    let blocks = match spec.family {
        NormFamily::Besov => dyadic_blocks(&sys.dyadic, spec.s),
        fam => uniform_blocks(&sys.uniform, fam, spec.s, spec.metric),
    };
    let l = blockwise_log_norm(
        &[t],
        std::slice::from_ref(f),
        &blocks,
        spec.p,
        spec.q,
        f64::INFINITY,
        &weight,
    )?;
    Ok(exp_or_zero(l))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Truncation {
    Dyadic { j_min: i32, j_max: i32 },
    Uniform { k_max: i64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub n: usize,
    #[serde(rename = "N")]
    pub resolution: usize,
}

/// JSON norm record.
#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub family: NormFamily,
    pub s: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub gamma: Option<Exponent>,
    pub weight: Option<WeightSpec>,
    pub value: f64,
    pub truncation: Truncation,
    pub grid: GridSummary,
    pub domain: String,
}

impl NormReport {
    pub fn new(spec: &NormSpec, value: f64, sys: &Systems) -> Self {
        let g = sys.grid();
        let truncation = match spec.family {
            NormFamily::Besov => Truncation::Dyadic {
                j_min: sys.dyadic.j_min(),
                j_max: sys.dyadic.j_max(),
            },
            _ => Truncation::Uniform {
                k_max: sys.uniform.k_max(),
            },
        };
        NormReport {
            family: spec.family,
            s: spec.s,
            p: spec.p,
            q: spec.q,
            gamma: spec.gamma,
            weight: spec.weight,
            value,
            truncation,
            grid: GridSummary {
                n: g.n_dims(),
                resolution: g.resolution(),
            },
            domain: format!("periodic torus, side {}", g.period()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn cosine(grid: &Grid, k: i64, amp: f64) -> SpectralField {
        let mut f = SpectralField::zeros(grid, 1);
        let n = grid.n_dims();
        let mut kv = vec![0; n];
        kv[0] = k;
        f.set_coeff_at(0, &kv, Complex64::new(amp / 2.0, 0.0)).unwrap();
        kv[0] = -k;
        f.set_coeff_at(0, &kv, Complex64::new(amp / 2.0, 0.0)).unwrap();
        f
    }

    #[test]
    fn single_shell_besov() {
        let g = Grid::new(2, 64).unwrap();
        let sys = Systems::new(&g);
        let f = cosine(&g, 8, 1.0);
        for q in [1.0, 2.0, f64::INFINITY] {
            let v = besov_norm(&f, 0.7, f64::INFINITY, q, &sys.dyadic).unwrap();
            assert!((v - 2f64.powf(3.0 * 0.7)).abs() < 1e-12);
        }
        assert_eq!(besov_norm(&SpectralField::zeros(&g, 1), 1.0, 2.0, 1.0, &sys.dyadic).unwrap(), 0.0);
    }

    #[test]
    fn two_shell_besov() {
        let g = Grid::new(2, 64).unwrap();
        let sys = Systems::new(&g);
        let f = cosine(&g, 2, 1.0).add(&cosine(&g, 16, 1.0)).unwrap();
        let v = besov_norm(&f, 1.0, f64::INFINITY, 1.0, &sys.dyadic).unwrap();
        assert!((v - 18.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn modulation_of_constant_and_cosine() {
        let g = Grid::new(2, 32).unwrap();
        let sys = Systems::new(&g);
        let mut one = SpectralField::zeros(&g, 1);
        one.coeffs_mut()[0] = Complex64::new(1.0, 0.0);
        for p in [1.0, 2.0, 4.0] {
            let v = modulation_norm(&one, 1.3, p, 2.0, &sys.uniform).unwrap();
            assert!((v - (4.0 * std::f64::consts::PI.powi(2)).powf(1.0 / p)).abs() < 1e-12);
        }
        let f = cosine(&g, 5, 1.0);
        let v = modulation_norm(&f, 1.0, f64::INFINITY, 1.0, &sys.uniform).unwrap();
        assert!((v - 26f64.sqrt()).abs() < 1e-12);
        let e0 = exp_modulation_norm(&f, 0.0, 2.0, 3.0, &sys.uniform, FreqMetric::Euclidean).unwrap();
        let m0 = modulation_norm(&f, 0.0, 2.0, 3.0, &sys.uniform).unwrap();
        assert!((e0 - m0).abs() < 1e-13 * m0);
    }

    #[test]
    fn exp_modulation_single_block() {
        let g = Grid::new(2, 32).unwrap();
        let sys = Systems::new(&g);
        let mut f = SpectralField::zeros(&g, 1);
        f.set_coeff_at(0, &[3, 0], Complex64::new(0.25, 0.1)).unwrap();
        let blk = sys.uniform.block(&[3, 0]).unwrap().lp_norm(&f, 2.0).unwrap();
        let v = exp_modulation_norm(&f, 1.0, 2.0, 1.0, &sys.uniform, FreqMetric::Euclidean).unwrap();
        assert!((v - 8.0 * blk).abs() < 1e-12 * v);
        // huge rates stay finite in the log domain
        let l = exp_modulation_log_norm(&f, 400.0, 2.0, 1.0, &sys.uniform, FreqMetric::Euclidean).unwrap();
        assert!((l - (1200.0 * LN_2 + blk.ln())).abs() < 1e-9);
    }

    #[test]
    fn chemin_lerner_matches_snapshot_for_constant_trace() {
        let g = Grid::new(2, 32).unwrap();
        let sys = Systems::new(&g);
        let f = cosine(&g, 3, 1.0).add(&cosine(&g, 9, 0.3)).unwrap();
        let tr = EvolutionTrace::from_parts(vec![0.0, 0.5, 1.0], vec![f.clone(), f.clone(), f.clone()]).unwrap();
        let a = chemin_lerner_norm(&tr, f64::INFINITY, 0.5, 2.0, 2.0, &sys.dyadic, &WeightSpec::none()).unwrap();
        let b = besov_norm(&f, 0.5, 2.0, 2.0, &sys.dyadic).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
        let one = EvolutionTrace::from_parts(vec![0.0], vec![f]).unwrap();
        assert!(matches!(
            chemin_lerner_norm(&one, 2.0, 0.5, 2.0, 2.0, &sys.dyadic, &WeightSpec::none()),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn decaying_mode_sup_is_initial() {
        let g = Grid::new(2, 32).unwrap();
        let sys = Systems::new(&g);
        let times: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let states = times.iter().map(|t| cosine(&g, 2, (-4.0 * t).exp())).collect();
        let tr = EvolutionTrace::from_parts(times, states).unwrap();
        let v = chemin_lerner_norm(&tr, f64::INFINITY, 0.0, f64::INFINITY, 1.0, &sys.dyadic, &WeightSpec::none()).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_modulation_trace_peaks_at_start() {
        let g = Grid::new(2, 32).unwrap();
        let sys = Systems::new(&g);
        let times: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let states = times.iter().map(|t| cosine(&g, 1, (-t).exp())).collect();
        let tr = EvolutionTrace::from_parts(times, states).unwrap();
        let v = time_exp_modulation_norm(
            &tr,
            &WeightSpec::modulation(1.0, None),
            f64::INFINITY,
            f64::INFINITY,
            1.0,
            &sys.uniform,
            FreqMetric::Euclidean,
        )
        .unwrap();
        // two blocks of value 1/2 at t = 0, since 2^t e^{-t} < 1 afterwards
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn guard_rejects_runaway_weights() {
        let g = Grid::new(2, 32).unwrap();
        let sys = Systems::new(&g);
        let f = cosine(&g, 10, 1.0);
        let tr = EvolutionTrace::from_parts(vec![0.0, 100.0], vec![f.clone(), f]).unwrap();
        let r = chemin_lerner_norm(&tr, f64::INFINITY, 0.0, 2.0, 1.0, &sys.dyadic, &WeightSpec::linear_t(1.0));
        assert!(matches!(r, Err(Error::UnstableWeight { .. })));
    }
}
