//! One kernel per inequality id: sample `i` in, LHS/RHS pairs out.

use std::f64::consts::{LN_2, LOG2_E, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ensemble::{sample_rng, weighted_convolution, Band, FieldLaw};
use super::{Ctx, Measurement};
use crate::error::Result;
use crate::semigroup::{block_decay_profiles, duhamel_trace, semigroup_trace, BlockId};
use crate::spaces::norms::l1_symbol;
use crate::spaces::{
    besov_norm, exp_modulation_norm, modulation_norm, trace_norm, EvolutionTrace, FreqMetric, NormSpec,
    WeightSpec,
};
use crate::spectral::{apply_multiplier, apply_real_table, derivative, spectral_lp_norm, SpectralField};

const INF: f64 = f64::INFINITY;

fn fmt_e(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn euclid(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A time-dependent weight in the explicit form `e^{L(t,ξ)}`,
/// `L = exponent(t)·table(ξ)`.
struct Weighting {
    spec: WeightSpec,
    table: Vec<f64>,
}

impl Weighting {
    fn none(ctx: &Ctx<'_>) -> Self {
        Weighting {
            spec: WeightSpec::none(),
            table: vec![0.0; ctx.grid.len()],
        }
    }

    /// `e^{w(t)|ξ|₁}`.
    fn lambda(ctx: &Ctx<'_>, spec: WeightSpec) -> Self {
        Weighting {
            spec,
            table: l1_symbol(&ctx.grid),
        }
    }

    /// `2^{s(t)|k|}`.
    fn modulation(ctx: &Ctx<'_>, spec: WeightSpec) -> Self {
        Weighting {
            spec,
            table: ctx.grid.symbol_table(|xi| LN_2 * euclid(xi)),
        }
    }

    fn logs(&self, t: f64) -> Option<Vec<f64>> {
        if self.spec.is_trivial() {
            return None;
        }
        let e = self.spec.exponent(t);
        Some(self.table.iter().map(|r| e * r).collect())
    }

    fn apply(&self, f: &SpectralField, t: f64, sign: f64) -> Result<SpectralField> {
        match self.logs(t) {
            None => Ok(f.clone()),
            Some(l) => {
                let table: Vec<f64> = l.iter().map(|x| (sign * x).exp()).collect();
                apply_real_table(f, &table)
            }
        }
    }

    fn table_max(&self) -> f64 {
        self.table.iter().cloned().fold(0.0, f64::max)
    }

    fn top(&self, t_end: f64) -> f64 {
        self.spec.exponent(t_end) * self.table_max()
    }

    /// Grid on `[0, T]` on which no mode's log-weight moves by more than 1/2
    /// between nodes, merged with `base`.
    fn refine(&self, base: &[f64]) -> Vec<f64> {
        let t_end = *base.last().expect("nonempty");
        let top = self.top(t_end);
        let mut out = base.to_vec();
        if top > 0.0 {
            let k = (2.0 * top).ceil() as usize;
            for i in 1..k {
                let target = top * i as f64 / k as f64;
                let (mut lo, mut hi) = (0.0, t_end);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if self.spec.exponent(mid) * self.table_max() < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        out.dedup();
        out
    }
}

fn trace_of(times: &[f64], states: Vec<SpectralField>) -> Result<EvolutionTrace> {
    EvolutionTrace::from_parts(times.to_vec(), states)
}

/// `e^{L}(e^{−L}F · e^{−L}G)` at every time of two traces on the same grid.
fn weighted_products(f: &EvolutionTrace, g: &EvolutionTrace, w: &Weighting) -> Result<EvolutionTrace> {
    let states = f
        .times()
        .iter()
        .zip(f.states().iter().zip(g.states()))
        .map(|(&t, (a, b))| weighted_convolution(a, b, w.logs(t).as_deref()))
        .collect::<Result<Vec<_>>>()?;
    trace_of(f.times(), states)
}

/// `(e^{L(t)} 𝒜f(t), g(t))` on `ctx.times`, for the forcing
/// `f(τ) = e^{−L(τ)} g(τ)`, `g` linear from `g1` at 0 to `g2` at T.
fn weighted_duhamel(
    ctx: &Ctx<'_>,
    g1: &SpectralField,
    g2: &SpectralField,
    alpha: f64,
    w: &Weighting,
) -> Result<(EvolutionTrace, EvolutionTrace)> {
    let t_end = ctx.opts.t_end;
    let fine = w.refine(&ctx.times);
    let g_at = |t: f64| g1.scaled(1.0 - t / t_end).axpy(t / t_end, g2);
    let forcing = fine
        .iter()
        .map(|&t| w.apply(&g_at(t)?, t, -1.0))
        .collect::<Result<Vec<_>>>()?;
    let a = duhamel_trace(&trace_of(&fine, forcing)?, alpha)?;
    let mut lhs = Vec::with_capacity(ctx.times.len());
    let mut rhs = Vec::with_capacity(ctx.times.len());
    for &t in &ctx.times {
        let i = fine.partition_point(|&x| x < t);
        lhs.push(w.apply(a.state(i), t, 1.0)?);
        rhs.push(g_at(t)?);
    }
    Ok((trace_of(&ctx.times, lhs)?, trace_of(&ctx.times, rhs)?))
}

fn gradient(f: &SpectralField) -> Result<SpectralField> {
    let n = f.grid().n_dims();
    let mut coeffs = Vec::with_capacity(n * f.grid().len());
    for a in 0..n {
        coeffs.extend_from_slice(derivative(f, a, 1)?.coeffs());
    }
    SpectralField::from_coeffs(f.grid(), n, coeffs)
}

fn gradient_trace(tr: &EvolutionTrace) -> Result<EvolutionTrace> {
    let states = tr.states().iter().map(gradient).collect::<Result<Vec<_>>>()?;
    trace_of(tr.times(), states)
}

/// Both Bernstein inequalities with `s = 1` on single-shell data.
pub(super) fn bernstein(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let n = ctx.n();
    let s = 1.0;
    let lam = ctx.grid.symbol_table(euclid);
    let sampler = ctx.sampler();
    let mut out = Vec::new();
    for j in ctx.sweep() {
        let f = sampler.shell_sample(i, 0, 1, Band::Full, j, &ctx.sys.dyadic)?;
        let dj = ctx.sys.dyadic.block(j)?.apply(&f);
        let ldj = apply_real_table(&dj, &lam)?;
        let scale = 2f64.powi(j);
        for (p, q) in [(2.0, 2.0), (2.0, INF), (4.0, INF), (1.0, 4.0)] {
            let lhs = spectral_lp_norm(&ldj, q)?;
            let rhs = scale.powf(s + n * (1.0 / p - 1.0 / q)) * spectral_lp_norm(&dj, p)?;
            out.push(Measurement::new(format!("upper p={} q={}", fmt_e(p), fmt_e(q)), lhs, rhs).at_shell(j));
        }
        for p in [1.0, 2.0, 4.0, INF] {
            let a = spectral_lp_norm(&ldj, p)?;
            let b = scale.powf(s) * spectral_lp_norm(&dj, p)?;
            out.push(Measurement::new(format!("two_sided_upper p={}", fmt_e(p)), a, b).at_shell(j));
            out.push(Measurement::new(format!("two_sided_lower p={}", fmt_e(p)), b, a).at_shell(j));
        }
    }
    Ok(out)
}

/// `‖U(t)u₀‖_{L̃^γ(e^{wΛ}Ḃ^s_{p,q})} ≲ ‖u₀‖_{Ḃ^{s−2α/γ}_{p,q}}` on the law's
/// sample and on single-shell data.
pub(super) fn semigroup_besov(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let n = ctx.n();
    let sampler = ctx.sampler();
    let mut fields = vec![(None, sampler.sample(i, 0, 1, Band::Full, &ctx.sys.dyadic)?)];
    for j in ctx.sweep() {
        fields.push((Some(j), sampler.shell_sample(i, 0, 1, Band::Full, j, &ctx.sys.dyadic)?));
    }
    let mut out = Vec::new();
    for &alpha in &ctx.opts.alphas {
        let mut weights = vec![("natural", ctx.natural_weight(alpha))];
        if alpha == 0.5 {
            weights.push(("none", WeightSpec::none()));
        }
        for (shell, u0) in &fields {
            let tr = semigroup_trace(u0, &ctx.times, alpha)?;
            for &(wname, w) in &weights {
                for gamma in [INF, 2.0] {
                    for (p, q) in [(2.0, 1.0), (4.0, 2.0)] {
                        let s = n / p;
                        let spec = NormSpec::besov(s, p, q).with_gamma(gamma).with_weight(w);
                        let lhs = trace_norm(&tr, &spec, &ctx.sys)?;
                        let rhs = besov_norm(u0, s - 2.0 * alpha / gamma, p, q, &ctx.sys.dyadic)?;
                        let label = format!("alpha={alpha} weight={wname} gamma={} p={p} q={q}", fmt_e(gamma));
                        let m = Measurement::new(label, lhs, rhs);
                        out.push(match shell {
                            Some(j) => m.at_shell(*j),
                            None => m,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `‖𝒜f‖_{L̃^γ(e^{wΛ}Ḃ^s_{p,q})} ≲ ‖f‖_{L̃^{γ₁}(e^{wΛ}Ḃ^{s−2α(1+1/γ−1/γ₁)}_{p,q})}`.
pub(super) fn duhamel_besov(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let n = ctx.n();
    let sampler = ctx.sampler();
    let g1 = sampler.sample(i, 0, 1, Band::Full, &ctx.sys.dyadic)?;
    let g2 = sampler.sample(i, 1, 1, Band::Full, &ctx.sys.dyadic)?;
    let mut out = Vec::new();
    for &alpha in &ctx.opts.alphas {
        let mut weights = vec![("natural", Weighting::lambda(ctx, ctx.natural_weight(alpha)))];
        if alpha == 0.5 {
            weights.push(("none", Weighting::none(ctx)));
        }
        for (wname, w) in &weights {
            let (a, f) = weighted_duhamel(ctx, &g1, &g2, alpha, w)?;
            for (gamma, gamma1) in [(INF, 1.0), (INF, 2.0), (2.0, 1.0)] {
                for (p, q) in [(2.0, 1.0), (4.0, 2.0)] {
                    let s = n / p;
                    let s1 = s - 2.0 * alpha * (1.0 + 1.0 / gamma - 1.0 / gamma1);
                    let lhs = trace_norm(&a, &NormSpec::besov(s, p, q).with_gamma(gamma), &ctx.sys)?;
                    let rhs = trace_norm(&f, &NormSpec::besov(s1, p, q).with_gamma(gamma1), &ctx.sys)?;
                    let label = format!(
                        "alpha={alpha} weight={wname} gamma={} gamma1={gamma1} p={p} q={q}",
                        fmt_e(gamma)
                    );
                    out.push(Measurement::new(label, lhs, rhs));
                }
            }
        }
    }
    Ok(out)
}

/// The weighted product estimate with `ε ∈ {0, 1/3}` and its `L̃¹` corollary,
/// in the variables `F = e^{wΛ}f`, `G = e^{wΛ}g`.
pub(super) fn bilinear_besov(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let n = ctx.n();
    let sampler = ctx.sampler();
    let f0 = sampler.sample(i, 0, 1, Band::Product, &ctx.sys.dyadic)?;
    let g0 = sampler.sample(i, 1, 1, Band::Product, &ctx.sys.dyadic)?;
    let mut out = Vec::new();
    for &alpha in &ctx.opts.alphas {
        let w = Weighting::lambda(ctx, ctx.natural_weight(alpha));
        let f = semigroup_trace(&f0, &ctx.times, alpha)?;
        let g = semigroup_trace(&g0, &ctx.times, alpha)?;
        let fg = weighted_products(&f, &g, &w)?;
        let norm = |tr: &EvolutionTrace, gamma: f64, s: f64, p: f64, q: f64| {
            trace_norm(tr, &NormSpec::besov(s, p, q).with_gamma(gamma), &ctx.sys)
        };
        for p in [2.0, 4.0] {
            let crit = n / p;
            // (label, ε, q, s, γ, γ₁, γ₂)
            let cases = [
                ("eps=0", 0.0, 1.0, crit, INF, INF, INF),
                ("eps=1/3", 1.0 / 3.0, 2.0, 0.5, 2.0, INF, 2.0),
                ("corollary", 1.0 / 3.0, 1.0, crit, 1.0, 3.0, 1.5),
                ("corollary", 1.0 / 3.0, 2.0, crit, 1.0, 3.0, 1.5),
            ];
            for (name, eps, q, s, gamma, gamma1, gamma2) in cases {
                let lhs = norm(&fg, gamma, s, p, q)?;
                let rhs = norm(&f, gamma1, crit - eps, p, q)? * norm(&g, gamma2, s + eps, p, q)?
                    + norm(&g, gamma1, crit - eps, p, q)? * norm(&f, gamma2, s + eps, p, q)?;
                out.push(Measurement::new(format!("alpha={alpha} {name} p={p} q={q}"), lhs, rhs));
            }
        }
    }
    Ok(out)
}

/// `‖B_t(u, v)‖_p ≲ ‖u‖_{p₁}‖v‖_{p₂}` with `1/p = 1/p₁ + 1/p₂`; the endpoint
/// exponents 1 and ∞ are recorded without gating.
pub(super) fn bilinear_exp(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let sampler = ctx.sampler();
    let u = sampler.sample(i, 0, 1, Band::Product, &ctx.sys.dyadic)?;
    let v = sampler.sample(i, 1, 1, Band::Product, &ctx.sys.dyadic)?;
    let l1 = l1_symbol(&ctx.grid);
    let cases = [
        (2.0, 4.0, 4.0, true),
        (2.0, 2.0, INF, true),
        (4.0, 8.0, 8.0, true),
        (4.0, 4.0, INF, true),
        (1.0, 2.0, 2.0, false),
        (INF, INF, INF, false),
    ];
    let norms_u: Vec<f64> = cases.iter().map(|c| spectral_lp_norm(&u, c.1)).collect::<Result<_>>()?;
    let norms_v: Vec<f64> = cases.iter().map(|c| spectral_lp_norm(&v, c.2)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for t in [0.0, 1e-3, 1e-2, 0.1, 1.0f64] {
        let logs: Vec<f64> = l1.iter().map(|r| t.sqrt() * r).collect();
        let b = weighted_convolution(&u, &v, Some(&logs))?;
        for (c, &(p, p1, p2, gating)) in cases.iter().enumerate() {
            let lhs = spectral_lp_norm(&b, p)?;
            let m = Measurement::new(
                format!("p={} p1={} p2={}", fmt_e(p), fmt_e(p1), fmt_e(p2)),
                lhs,
                norms_u[c] * norms_v[c],
            );
            out.push(if gating { m } else { m.recorded_only() });
        }
    }
    Ok(out)
}

/// Every nonempty dyadic shell plus the uniform blocks on the axes and
/// diagonals, for `f`.
fn decay_blocks(ctx: &Ctx<'_>, f: &SpectralField) -> Result<Vec<BlockId>> {
    let mut ids: Vec<BlockId> = ctx.sys.dyadic.blocks().map(|(j, _)| BlockId::Dyadic(j)).collect();
    let nd = ctx.grid.n_dims();
    let lim = Band::Full.limit(&ctx.grid);
    let mut dirs: Vec<Vec<i64>> = Vec::new();
    for a in 0..nd {
        let mut e = vec![0; nd];
        e[a] = 1;
        dirs.push(e);
    }
    dirs.push(vec![1; nd]);
    let mut anti = vec![1; nd];
    anti[nd - 1] = -1;
    dirs.push(anti);
    for d in &dirs {
        for m in 1..=lim {
            ids.push(BlockId::Uniform(d.iter().map(|x| x * m).collect()));
        }
    }
    let mut keep = Vec::with_capacity(ids.len());
    for id in ids {
        if id.resolve(&ctx.sys)?.lp_norm(f, INF)? > 0.0 {
            keep.push(id);
        }
    }
    Ok(keep)
}

/// `‖block U(t) f‖_∞ ≤ e^{−t r^{2α}} ‖block f‖_∞`: the ratio is measured/bound.
pub(super) fn uniform_decay(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let sampler = ctx.sampler();
    let mut fields = vec![sampler.sample(i, 0, 1, Band::Full, &ctx.sys.dyadic)?];
    for j in ctx.sweep() {
        fields.push(sampler.shell_sample(i, 0, 1, Band::Full, j, &ctx.sys.dyadic)?);
    }
    let times: Vec<f64> = (0..10).map(|k| 10f64.powf(-3.0 + k as f64 / 3.0)).collect();
    let mut out = Vec::new();
    for f in &fields {
        let ids = decay_blocks(ctx, f)?;
        for &alpha in &ctx.opts.alphas {
            for &t in &times {
                let profiles = block_decay_profiles(f, &ids, t, alpha, &ctx.sys)?;
                for (id, d) in ids.iter().zip(profiles) {
                    let kind = match id {
                        BlockId::Dyadic(_) => "dyadic",
                        BlockId::Uniform(_) => "uniform",
                    };
                    out.push(Measurement::new(format!("alpha={alpha} {kind}"), d.measured, d.bound_rate));
                }
            }
        }
    }
    Ok(out)
}

/// The product estimate in `L̃^q̃(E^{s(t)}_{p,q})` with the `sup 2^{4s}` factor,
/// in the variables `2^{s(t)|k|}f`.
pub(super) fn product_modulation(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let sampler = ctx.sampler();
    let f0 = sampler.sample(i, 0, 1, Band::Product, &ctx.sys.dyadic)?;
    let g0 = sampler.sample(i, 1, 1, Band::Product, &ctx.sys.dyadic)?;
    let f = semigroup_trace(&f0, &ctx.times, 0.5)?;
    let g = semigroup_trace(&g0, &ctx.times, 0.5)?;
    // ((p, p1, p2), (q, q1, q2), (q̃, q̃1, q̃2))
    let combos = [
        ((1.0, 2.0, 2.0), (1.0, 1.0, 1.0), (1.0, 2.0, 2.0)),
        ((2.0, 4.0, 4.0), (2.0, 1.0, 2.0), (2.0, INF, 2.0)),
        ((2.0, 2.0, INF), (INF, 2.0, 2.0), (INF, INF, INF)),
        ((4.0, 8.0, 8.0), (1.0, 1.0, 1.0), (1.0, 2.0, 2.0)),
        ((INF, INF, INF), (1.0, 1.0, 1.0), (INF, INF, INF)),
    ];
    let norm = |tr: &EvolutionTrace, p: f64, q: f64, qt: f64| {
        trace_norm(tr, &NormSpec::exp_modulation(0.0, p, q).with_gamma(qt), &ctx.sys)
    };
    let mut out = Vec::new();
    for c in [2f64.powi(-10), 2f64.powi(-5)] {
        let w = Weighting::modulation(ctx, WeightSpec::modulation(c, None));
        let fg = weighted_products(&f, &g, &w)?;
        let factor = 2f64.powf(4.0 * c * ctx.opts.t_end);
        for ((p, p1, p2), (q, q1, q2), (qt, qt1, qt2)) in combos {
            let lhs = norm(&fg, p, q, qt)?;
            let rhs = factor * norm(&f, p1, q1, qt1)? * norm(&g, p2, q2, qt2)?;
            let label = format!(
                "c=2^{} p={} q={} qt={}",
                c.log2(),
                fmt_e(p),
                fmt_e(q),
                fmt_e(qt)
            );
            out.push(Measurement::new(label, lhs, rhs));
        }
    }
    Ok(out)
}

/// Linear estimates in `L̃^q̃(E^{ct}_{p,1})` and the `⟨k⟩^{-1}`-weighted
/// `L^∞_t` bounds, for `U₂` with `c = 2^{-10}` and `U₁` with `c = 2^{-5}`.
pub(super) fn linear_modulation(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let sampler = ctx.sampler();
    let u0 = sampler.sample(i, 0, 1, Band::Full, &ctx.sys.dyadic)?;
    let g1 = sampler.sample(i, 1, 1, Band::Full, &ctx.sys.dyadic)?;
    let g2 = sampler.sample(i, 2, 1, Band::Full, &ctx.sys.dyadic)?;
    let ps = [1.0, 2.0, INF];
    let mut out = Vec::new();

    let c2 = WeightSpec::modulation(2f64.powi(-10), None);
    let free = semigroup_trace(&u0, &ctx.times, 1.0)?;
    let (a2, f2) = weighted_duhamel(ctx, &g1, &g2, 1.0, &Weighting::modulation(ctx, c2))?;
    let grad_a2 = gradient_trace(&a2)?;
    let c1 = WeightSpec::modulation(2f64.powi(-5), None);
    let (a1, f1) = weighted_duhamel(ctx, &g1, &g2, 0.5, &Weighting::modulation(ctx, c1))?;
    let grad_a1 = gradient_trace(&a1)?;

    let e = |tr: &EvolutionTrace, p: f64, qt: f64| {
        trace_norm(tr, &NormSpec::exp_modulation(0.0, p, 1.0).with_gamma(qt), &ctx.sys)
    };
    let mk = |tr: &EvolutionTrace, p: f64| {
        trace_norm(tr, &NormSpec::modulation(-1.0, p, 1.0).with_gamma(INF), &ctx.sys)
    };
    for p in ps {
        let pl = fmt_e(p);
        let m_1 = modulation_norm(&u0, -1.0, p, 1.0, &ctx.sys.uniform)?;
        let lhs = trace_norm(
            &free,
            &NormSpec::exp_modulation(0.0, p, 1.0).with_gamma(2.0).with_weight(c2),
            &ctx.sys,
        )?;
        out.push(Measurement::new(format!("heat L2 E p={pl}"), lhs, m_1));
        let lhs = trace_norm(
            &free,
            &NormSpec::modulation(-1.0, p, 1.0).with_gamma(INF).with_weight(c2),
            &ctx.sys,
        )?;
        out.push(Measurement::new(format!("heat Linf M-1 p={pl}"), lhs, m_1));
        let r2 = e(&f2, p, 1.0)?;
        out.push(Measurement::new(format!("heat grad duhamel L2 p={pl}"), e(&grad_a2, p, 2.0)?, r2));
        out.push(Measurement::new(format!("heat grad duhamel Linf M-1 p={pl}"), mk(&grad_a2, p)?, r2));
        let r1 = e(&f1, p, 1.0)?;
        out.push(Measurement::new(format!("half grad duhamel L1 p={pl}"), e(&grad_a1, p, 1.0)?, r1));
        out.push(Measurement::new(format!("half duhamel Linf p={pl}"), e(&a1, p, INF)?, r1));
    }
    Ok(out)
}

/// Case I: the Besov algebra `Ḃ^{n/p}_{p,1}` in `L̃^∞`, with and without
/// `e^{tΛ/2n}`. Case II: `L̃¹Ḃ¹_{∞,1}` against `L̃^∞Ḃ⁰_{∞,1} × L̃¹Ḃ¹_{∞,1}`.
pub(super) fn paraproduct_infty(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let n = ctx.n();
    let sampler = ctx.sampler();
    let f0 = sampler.sample(i, 0, 1, Band::Product, &ctx.sys.dyadic)?;
    let g0 = sampler.sample(i, 1, 1, Band::Product, &ctx.sys.dyadic)?;
    let f = semigroup_trace(&f0, &ctx.times, 0.5)?;
    let g = semigroup_trace(&g0, &ctx.times, 0.5)?;
    let norm = |tr: &EvolutionTrace, gamma: f64, s: f64, p: f64| {
        trace_norm(tr, &NormSpec::besov(s, p, 1.0).with_gamma(gamma), &ctx.sys)
    };
    let mut out = Vec::new();
    let plain = weighted_products(&f, &g, &Weighting::none(ctx))?;
    let weighted = weighted_products(&f, &g, &Weighting::lambda(ctx, ctx.natural_weight(0.5)))?;
    for (wname, fg) in [("none", &plain), ("natural", &weighted)] {
        for p in [2.0, 4.0] {
            let lhs = norm(fg, INF, n / p, p)?;
            let rhs = norm(&f, INF, n / p, p)? * norm(&g, INF, n / p, p)?;
            out.push(Measurement::new(format!("case I weight={wname} p={p}"), lhs, rhs));
        }
    }
    let lhs = norm(&plain, 1.0, 1.0, INF)?;
    let rhs = norm(&f, INF, 0.0, INF)? * norm(&g, 1.0, 1.0, INF)? + norm(&g, INF, 0.0, INF)? * norm(&f, 1.0, 1.0, INF)?;
    out.push(Measurement::new("case II", lhs, rhs));
    Ok(out)
}

/// A sum of three Gaussian bumps `φ(ξ) = Σ a_m e^{−|ξ−c_m|²/2σ²}` and its
/// `H^s` norm `(∫(1+|x|²)^s |φ̌|² dx)^{1/2}`, `φ̌ = (2π)^{−n}∫φ e^{ix·ξ}dξ`.
struct Bumps {
    sigma: f64,
    amps: Vec<f64>,
    centres: Vec<Vec<f64>>,
}

impl Bumps {
    fn draw(ctx: &Ctx<'_>, i: usize) -> Self {
        let mut rng = sample_rng(ctx.spec.seed, i, 7);
        let sigma = rng.random_range(1.0..3.0);
        let nd = ctx.grid.n_dims();
        let mut amps = Vec::new();
        let mut centres = Vec::new();
        for _ in 0..3 {
            amps.push(rng.sample::<f64, _>(StandardNormal));
            centres.push((0..nd).map(|_| rng.random_range(-8.0..8.0)).collect());
        }
        Bumps { sigma, amps, centres }
    }

    fn symbol(&self, xi: &[f64]) -> f64 {
        self.amps
            .iter()
            .zip(&self.centres)
            .map(|(a, c)| {
                let d2: f64 = xi.iter().zip(c).map(|(x, y)| (x - y).powi(2)).sum();
                a * (-d2 / (2.0 * self.sigma * self.sigma)).exp()
            })
            .sum()
    }

    fn sobolev(&self, s: f64) -> f64 {
        let nd = self.centres[0].len();
        let (h, half): (f64, f64) = if nd == 2 { (0.05, 7.0) } else { (0.08, 6.5) };
        let m = (half / h).round() as i64;
        let s2 = self.sigma * self.sigma;
        let pref = (s2 / (2.0 * PI)).powi(nd as i32);
        let mut acc = 0.0;
        let mut idx = vec![-m; nd];
        loop {
            let x: Vec<f64> = idx.iter().map(|v| *v as f64 * h).collect();
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let mut z = Complex64::new(0.0, 0.0);
            for (a, c) in self.amps.iter().zip(&self.centres) {
                let ph: f64 = x.iter().zip(c).map(|(u, v)| u * v).sum();
                z += Complex64::from_polar(*a, ph);
            }
            acc += (1.0 + r2).powf(s) * (-s2 * r2).exp() * z.norm_sqr();
            let mut d = 0;
            loop {
                idx[d] += 1;
                if idx[d] <= m {
                    break;
                }
                idx[d] = -m;
                d += 1;
                if d == nd {
                    return (pref * acc * h.powi(nd as i32)).sqrt();
                }
            }
        }
    }
}

/// `‖φ(D)f‖_r ≤ C‖φ‖_{H^s}‖f‖_r` with `s = n/2 + 1/2`.
pub(super) fn nikolskij(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let f = ctx.sampler().sample(i, 0, 1, Band::Full, &ctx.sys.dyadic)?;
    let phi = Bumps::draw(ctx, i);
    let hs = phi.sobolev(ctx.n() / 2.0 + 0.5);
    let g = apply_multiplier(&f, |xi| Complex64::new(phi.symbol(xi), 0.0))?;
    let mut out = Vec::new();
    for r in [1.0, 2.0, 4.0, INF] {
        let lhs = spectral_lp_norm(&g, r)?;
        let rhs = hs * spectral_lp_norm(&f, r)?;
        out.push(Measurement::new(format!("r={}", fmt_e(r)), lhs, rhs));
    }
    Ok(out)
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// Multi-indices of order `m` in `nd` variables.
fn multi_indices(nd: usize, m: u32) -> Vec<Vec<u32>> {
    if nd == 1 {
        return vec![vec![m]];
    }
    let mut out = Vec::new();
    for first in 0..=m {
        for mut rest in multi_indices(nd - 1, m - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Highest derivative order probed.
pub(super) const GEVREY_MAX_ORDER: u32 = 12;

/// Both inclusions between the Gevrey class and `E^s_{p,q}` on analytic data
/// `|f̂(k)| ~ e^{−a|k|}`: `‖∂^β f‖_p ≲ β! s^{−|β|}‖f‖_{E^{c̃s}_{p,q}}` with
/// `s = a/4n`, and `‖f‖_{E^{s log₂e}_{p,∞}} ≲ sup_m ‖∂^m f‖_p ρ^m/m!` with
/// `ρ = a/2`, `s = ρ/4n`.
pub(super) fn gevrey_equivalence(ctx: &Ctx<'_>, i: usize) -> Result<Vec<Measurement>> {
    let n = ctx.n();
    let nd = ctx.grid.n_dims();
    let rate = match ctx.spec.field_law {
        FieldLaw::Analytic { rate } => rate,
        _ => 0.5,
    };
    let f = ctx.sampler().analytic_sample(i, 0, rate, Band::Full)?;
    let uni = &ctx.sys.uniform;
    let c_tilde = (2.0 * n * LOG2_E).ceil();
    let s = rate / (4.0 * n);
    let mut out = Vec::new();

    let ps = [(2.0, 1.0), (INF, INF), (1.0, 2.0)];
    let e_norms: Vec<f64> = ps
        .iter()
        .map(|&(p, q)| exp_modulation_norm(&f, c_tilde * s, p, q, uni, FreqMetric::Euclidean))
        .collect::<Result<_>>()?;
    for m in 0..=GEVREY_MAX_ORDER {
        for beta in multi_indices(nd, m) {
            let mut d = f.clone();
            for (axis, &order) in beta.iter().enumerate() {
                if order > 0 {
                    d = derivative(&d, axis, order)?;
                }
            }
            let fact: f64 = beta.iter().map(|&b| factorial(b)).product();
            for (&(p, q), en) in ps.iter().zip(&e_norms) {
                let lhs = spectral_lp_norm(&d, p)? * s.powi(m as i32);
                out.push(Measurement::new(format!("direct p={} q={}", fmt_e(p), fmt_e(q)), lhs, fact * en));
            }
        }
    }

    let rho = rate / 2.0;
    let s_conv = rho / (4.0 * n);
    for p in [2.0, INF, 1.0] {
        let lhs = exp_modulation_norm(&f, s_conv * LOG2_E, p, INF, uni, FreqMetric::Euclidean)?;
        let mut m_sup: f64 = 0.0;
        for axis in 0..nd {
            for m in 0..=GEVREY_MAX_ORDER {
                let d = if m == 0 { f.clone() } else { derivative(&f, axis, m)? };
                m_sup = m_sup.max(spectral_lp_norm(&d, p)? * rho.powi(m as i32) / factorial(m));
            }
        }
        out.push(Measurement::new(format!("converse p={}", fmt_e(p)), lhs, m_sup));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::{verify_with, EnsembleSpec, VerifyOptions};
    use super::*;

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(2, 3).len(), 4);
        assert_eq!(multi_indices(3, 2).len(), 6);
        assert!(multi_indices(3, 4).iter().all(|b| b.iter().sum::<u32>() == 4));
    }

    #[test]
    fn gaussian_sobolev_norm_matches_closed_form() {
        // one bump at the origin in 2D, s = 0: (σ²/2π)² ∫e^{−σ²|x|²}dx = σ²/4π
        let b = Bumps {
            sigma: 1.5,
            amps: vec![1.0],
            centres: vec![vec![0.0, 0.0]],
        };
        let closed = 1.5 / (4.0 * PI).sqrt();
        assert!((b.sobolev(0.0) - closed).abs() < 1e-10 * closed);
        // s = 1 adds ∫|x|²|φ̌|² = (σ²/2π)² π/σ⁴
        let with_s = (closed.powi(2) + (1.5f64.powi(2) / (2.0 * PI)).powi(2) * PI / 1.5f64.powi(4)).sqrt();
        assert!((b.sobolev(1.0) - with_s).abs() < 1e-10 * with_s);
    }

    fn quick(law: FieldLaw) -> EnsembleSpec {
        EnsembleSpec {
            resolutions: vec![32],
            ..EnsembleSpec::new(10, law, 5)
        }
    }

    #[test]
    fn bernstein_l2_ratio_is_at_most_two() {
        let r = verify_with(
            "bernstein",
            &quick(FieldLaw::BlockSupported { index: 2 }),
            &VerifyOptions::default(),
        )
        .unwrap();
        let l2 = r.cases.iter().find(|c| c.label == "upper p=2 q=2").unwrap();
        assert!(l2.c_emp[0] <= 2.0 && l2.c_emp[0] > 1.0, "{:?}", l2.c_emp);
        // lower and upper two-sided ratios at p = 2 sandwich the shell radii
        let lo = r.cases.iter().find(|c| c.label == "two_sided_lower p=2").unwrap();
        assert!(lo.c_emp[0] <= 2.0);
    }

    #[test]
    fn bilinear_exp_at_time_zero_is_holder() {
        let spec = quick(FieldLaw::GaussianSpectrum { decay: 1.0 });
        let ctx = Ctx {
            spec: &spec,
            opts: &VerifyOptions::default(),
            grid: crate::spectral::Grid::new(2, 32).unwrap(),
            sys: crate::spaces::Systems::new(&crate::spectral::Grid::new(2, 32).unwrap()),
            times: super::super::verify_times(1.0),
        };
        let ms = bilinear_exp(&ctx, 3).unwrap();
        // the first block of six measurements is t = 0
        for m in &ms[..6] {
            assert!(m.ratio() <= 1.0 + 1e-12, "{}: {}", m.case, m.ratio());
        }
    }

    #[test]
    fn refined_grid_bounds_weight_steps() {
        let spec = quick(FieldLaw::Analytic { rate: 0.5 });
        let grid = crate::spectral::Grid::new(2, 32).unwrap();
        let ctx = Ctx {
            spec: &spec,
            opts: &VerifyOptions::default(),
            sys: crate::spaces::Systems::new(&grid),
            grid,
            times: super::super::verify_times(1.0),
        };
        let w = Weighting::lambda(&ctx, WeightSpec::sqrt_t(1.0));
        let fine = w.refine(&ctx.times);
        let top = w.top(1.0);
        for pair in fine.windows(2) {
            let step = (pair[1].sqrt() - pair[0].sqrt()) * top;
            assert!(step <= 0.5 + 1e-9, "{step}");
        }
        assert!(ctx.times.iter().all(|t| fine.contains(t)));
    }
}
