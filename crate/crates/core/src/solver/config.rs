use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semigroup::check_alpha;
use crate::spaces::{NormFamily, NormSpec, WeightSpec};

/// Which family of time-space norms measures Picard iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PicardMetric {
    /// `L̃³ e^{√tΛ}Ḃ^{n/p−1/3}_{p,q} ∩ L̃^{3/2} e^{√tΛ}Ḃ^{n/p+1/3}_{p,q}` (α = 1).
    Besov,
    /// `L̃^{2α/(2α−1)} E^{ct}_{p,1}`, `c = 2^{-10}`; for α = 1/2 the sup-in-time
    /// norm with `s(t) = 2^{-5}(1 ∧ t)`.
    Modulation,
    /// `L̃^{γ±} e^{t^{1/2α}Λ}Ḃ^{n/p±ε}_{p,q}`, `γ± = 2α/(2α−1±ε)`.
    Gns,
    /// `L̃^∞ e^{tΛ/2n}Ḃ^{n/p}_{p,1}` (α = 1/2).
    AlphaHalf,
}

impl PicardMetric {
    pub fn default_for(alpha: f64) -> Self {
        if (alpha - 1.0).abs() < 1e-15 {
            PicardMetric::Besov
        } else if (alpha - 0.5).abs() < 1e-15 {
            PicardMetric::AlphaHalf
        } else {
            PicardMetric::Gns
        }
    }
}

/// Modulation-scheme rate `c`.
pub const MODULATION_RATE: f64 = 1.0 / 1024.0;
/// Rate of `s(t) = 2^{-5}(1 ∧ t)` used when α = 1/2.
pub const MODULATION_RATE_HALF: f64 = 1.0 / 32.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(rename = "T", default = "one")]
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_n_picard")]
    pub n_picard: usize,
    #[serde(default = "default_samples")]
    pub picard_time_samples: usize,
    /// Defaults to `Ḃ^{n/p−2α+1}_{2,1}`.
    #[serde(default)]
    pub smallness_space: Option<NormSpec>,
    /// Fixed-point ball radius; defaults to `1/(4 C_emp)`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Overrides the weight of the Picard metric.
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    #[serde(default = "default_eps")]
    pub gns_epsilon: f64,
    /// Norms recorded per step; the continuation functional always uses the
    /// metric norms.
    #[serde(default)]
    pub continuation_norms: Vec<NormSpec>,
    #[serde(default)]
    pub metric: Option<PicardMetric>,
    /// `false` drops `P div(u⊗u)` (linear heat flow).
    #[serde(default = "yes")]
    pub nonlinear: bool,
    #[serde(default)]
    pub override_smallness: bool,
    /// Calibrated constant for the smallness threshold.
    #[serde(default)]
    pub calibration_constant: Option<f64>,
    /// Relative distance below which a Picard run counts as converged.
    #[serde(default = "default_tol")]
    pub picard_tol: f64,
    /// Stepper states are stored every this many steps (the last step is
    /// always stored).
    #[serde(default = "default_record")]
    pub record_every: usize,
}

fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_dt() -> f64 {
    1e-3
}
fn default_n_picard() -> usize {
    8
}
fn default_samples() -> usize {
    65
}
fn default_eps() -> f64 {
    0.1
}
fn default_tol() -> f64 {
    1e-10
}
fn default_record() -> usize {
    10
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 1.0,
            t_end: 1.0,
            dt: default_dt(),
            n_picard: default_n_picard(),
            picard_time_samples: default_samples(),
            smallness_space: None,
            delta: None,
            weight: None,
            gns_epsilon: default_eps(),
            continuation_norms: Vec::new(),
            metric: None,
            nonlinear: true,
            override_smallness: false,
            calibration_constant: None,
            picard_tol: default_tol(),
            record_every: default_record(),
        }
    }
}

impl SolverConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        SolverConfig {
            alpha,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha).map_err(|_| {
            Error::validation("solver.alpha", format!("{} is outside [1/2, 1]", self.alpha))
        })?;
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::validation("solver.T", format!("{} is not positive", self.t_end)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::validation("solver.dt", format!("{} is not positive", self.dt)));
        }
        if self.n_picard < 2 {
            return Err(Error::validation("solver.n_picard", "must be at least 2"));
        }
        if self.picard_time_samples < 2 {
            return Err(Error::validation("solver.picard_time_samples", "must be at least 2"));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::validation("solver.delta", format!("{d} is not positive")));
            }
        }
        if !(self.gns_epsilon > 0.0 && self.gns_epsilon < 0.25) {
            return Err(Error::validation(
                "solver.gns_epsilon",
                format!("{} is outside (0, 1/4)", self.gns_epsilon),
            ));
        }
        if let Some(c) = self.calibration_constant {
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::validation(
                    "solver.calibration_constant",
                    format!("{c} is not positive"),
                ));
            }
        }
        if let Some(w) = &self.weight {
            w.validate()
                .map_err(|e| Error::validation("solver.weight", e.to_string()))?;
        }
        if let Some(s) = &self.smallness_space {
            s.validate()
                .map_err(|e| Error::validation("solver.smallness_space", e.to_string()))?;
        }
        for (i, n) in self.continuation_norms.iter().enumerate() {
            n.validate()
                .map_err(|e| Error::validation(format!("solver.continuation_norms[{i}]"), e.to_string()))?;
        }
        if !(self.picard_tol >= 0.0) {
            return Err(Error::validation("solver.picard_tol", "must be >= 0"));
        }
        if self.record_every == 0 {
            return Err(Error::validation("solver.record_every", "must be at least 1"));
        }
        Ok(())
    }

    pub fn metric(&self) -> PicardMetric {
        self.metric.unwrap_or_else(|| PicardMetric::default_for(self.alpha))
    }

    /// The critical data norm `Ḃ^{n/p−2α+1}_{p,q}` (or the configured one).
    pub fn smallness_norm(&self, n_dims: usize) -> NormSpec {
        match self.smallness_space {
            Some(s) => s,
            None => NormSpec::besov(n_dims as f64 / 2.0 - 2.0 * self.alpha + 1.0, 2.0, 1.0),
        }
    }

    /// Graded sample times `T(i/(M−1))²`, dense near 0 where `e^{√tΛ}` varies
    /// fastest.
    pub fn picard_times(&self) -> Vec<f64> {
        let m = self.picard_time_samples - 1;
        (0..=m)
            .map(|i| {
                let r = i as f64 / m as f64;
                self.t_end * r * r
            })
            .collect()
    }

    /// The norms whose maximum is the Picard distance, for dimension `n`.
    pub fn metric_norms(&self, n_dims: usize) -> Vec<NormSpec> {
        let base = self.smallness_norm(n_dims);
        let (p, q) = (base.p.0, base.q.0);
        let n = n_dims as f64;
        let a = self.alpha;
        let mut norms = match self.metric() {
            PicardMetric::Besov => {
                let w = WeightSpec::sqrt_t(1.0);
                vec![
                    NormSpec::besov(n / p - 1.0 / 3.0, p, q).with_gamma(3.0).with_weight(w),
                    NormSpec::besov(n / p + 1.0 / 3.0, p, q).with_gamma(1.5).with_weight(w),
                ]
            }
            PicardMetric::Modulation => {
                let spec = NormSpec::exp_modulation(0.0, p, 1.0);
                if (a - 0.5).abs() < 1e-15 {
                    vec![spec.with_weight(WeightSpec::modulation(MODULATION_RATE_HALF, Some(1.0)))]
                } else {
                    vec![spec
                        .with_gamma(2.0 * a / (2.0 * a - 1.0))
                        .with_weight(WeightSpec::modulation(MODULATION_RATE, None))]
                }
            }
            PicardMetric::Gns => {
                let e = self.gns_epsilon;
                let w = WeightSpec::for_alpha(a, 1.0);
                let gp = 2.0 * a / (2.0 * a - 1.0 + e);
                let gm = 2.0 * a / (2.0 * a - 1.0 - e);
                vec![
                    NormSpec::besov(n / p + e, p, q).with_gamma(gp).with_weight(w),
                    NormSpec::besov(n / p - e, p, q).with_gamma(gm).with_weight(w),
                ]
            }
            PicardMetric::AlphaHalf => {
                vec![NormSpec::besov(n / p, p, 1.0).with_weight(WeightSpec::linear_t(1.0 / (2.0 * n)))]
            }
        };
        if let Some(w) = self.weight {
            for s in &mut norms {
                let fits = match s.family {
                    NormFamily::Besov => !w.is_modulation(),
                    _ => !w.is_lambda(),
                };
                if fits {
                    s.weight = Some(w);
                }
            }
        }
        norms
    }

    /// Ball radius δ given a calibrated constant.
    pub fn delta_for(&self, c_emp: f64) -> f64 {
        self.delta.unwrap_or(1.0 / (4.0 * c_emp))
    }
}
