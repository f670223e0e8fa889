//! Empirical constants of the inequalities the existence proofs lean on:
//! random ensembles, per-sample LHS/RHS ratios, resolution and shell drift,
//! and the calibration record the solver's smallness check consumes.

pub mod calibrate;
mod ensemble;
mod verify;

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spaces::{Systems, WeightSpec};
use crate::spectral::Grid;

pub use calibrate::{calibrate, CalibrationRecord};
pub use ensemble::{random_div_free, weighted_convolution, Band, EnsembleSpec, FieldLaw, Sampler};

/// Every id `verify` accepts.
pub const VERIFY_IDS: [&str; 11] = [
    "bernstein",
    "semigroup_besov",
    "duhamel_besov",
    "bilinear_besov",
    "bilinear_exp",
    "uniform_decay",
    "product_modulation",
    "linear_modulation",
    "paraproduct_infty",
    "nikolskij",
    "gevrey_equivalence",
];

/// Number of nonzero times in the verification grid.
pub const VERIFY_TIME_POINTS: usize = 32;

/// `0` followed by 32 geometric points from `10⁻⁵T` to `T`.
pub fn verify_times(t_end: f64) -> Vec<f64> {
    let lo = 1e-5f64.ln();
    let mut out = vec![0.0];
    for i in 0..VERIFY_TIME_POINTS {
        let x = lo * (1.0 - i as f64 / (VERIFY_TIME_POINTS - 1) as f64);
        out.push(t_end * x.exp());
    }
    *out.last_mut().expect("nonempty") = t_end;
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    /// Dissipation orders swept by the α-dependent ids.
    pub alphas: Vec<f64>,
    pub drift_bound: f64,
    pub t_end: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            alphas: vec![0.5, 0.75, 1.0],
            drift_bound: 2.0,
            t_end: 1.0,
        }
    }
}

impl VerifyOptions {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.5..=1.0).contains(a)) {
            return Err(Error::validation("verify.alphas", "each α must lie in [1/2, 1]"));
        }
        if !(self.drift_bound >= 1.0) {
            return Err(Error::validation("verify.drift_bound", format!("{} < 1", self.drift_bound)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::validation("verify.t_end", format!("{} is not positive", self.t_end)));
        }
        Ok(())
    }
}

/// One LHS/RHS pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub case: String,
    /// Dyadic shell of single-shell data, when the sample is one.
    pub shell: Option<i32>,
    /// Whether the case enters `C_emp` and the drift.
    pub gating: bool,
    pub lhs: f64,
    pub rhs: f64,
}

impl Measurement {
    pub fn new(case: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Measurement {
            case: case.into(),
            shell: None,
            gating: true,
            lhs,
            rhs,
        }
    }

    pub fn at_shell(mut self, j: i32) -> Self {
        self.shell = Some(j);
        self
    }

    pub fn recorded_only(mut self) -> Self {
        self.gating = false;
        self
    }

    /// `lhs/rhs`, with `0/0 = 0`.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 && self.rhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub label: String,
    pub gating: bool,
    /// Max ratio per resolution.
    pub c_emp: Vec<f64>,
    /// `max_N max(r, 1/r)`, `r = C(N)/C(N₀)`.
    pub drift: f64,
    /// Max over resolutions of the spread of per-shell maxima over the
    /// sweep range, when the case has shell data.
    pub shell_drift: Option<f64>,
}

/// A sample whose ratio was not finite.
#[derive(Debug, Clone, Serialize)]
pub struct SampleFailure {
    pub sample: usize,
    pub resolution: usize,
    pub case: String,
    pub shell: Option<i32>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub inequality_id: String,
    pub resolutions: Vec<usize>,
    pub seed: u64,
    /// Max gating ratio of each sample over cases and resolutions.
    pub per_sample_ratio: Vec<f64>,
    #[serde(rename = "C_emp")]
    pub c_emp: f64,
    pub c_emp_by_resolution: Vec<f64>,
    pub resolution_drift: f64,
    pub shell_drift: Option<f64>,
    pub drift_bound: f64,
    pub pass: bool,
    pub cases: Vec<CaseReport>,
    pub failures: Vec<SampleFailure>,
}

/// Shared state of one resolution's run.
pub(crate) struct Ctx<'a> {
    pub spec: &'a EnsembleSpec,
    pub opts: &'a VerifyOptions,
    pub grid: Grid,
    pub sys: Systems,
    pub times: Vec<f64>,
}

impl Ctx<'_> {
    pub fn sampler(&self) -> Sampler<'_> {
        Sampler::new(self.spec, &self.grid)
    }

    pub fn n(&self) -> f64 {
        self.grid.n_dims() as f64
    }

    /// Shells probed by single-shell data: `[max(2, j_min), j_max − 2]`.
    pub fn sweep(&self) -> RangeInclusive<i32> {
        self.sys.dyadic.j_min().max(2)..=self.sys.dyadic.j_max() - 2
    }

    /// `e^{√t Λ}`, `e^{tΛ/2n}` or `e^{t^{1/2α}Λ}`.
    pub fn natural_weight(&self, alpha: f64) -> WeightSpec {
        if (alpha - 0.5).abs() < 1e-15 {
            WeightSpec::linear_t(1.0 / (2.0 * self.n()))
        } else {
            WeightSpec::for_alpha(alpha, 1.0)
        }
    }
}

type Kernel = fn(&Ctx<'_>, usize) -> Result<Vec<Measurement>>;

fn kernel(id: &str) -> Option<Kernel> {
    Some(match id {
        "bernstein" => verify::bernstein,
        "semigroup_besov" => verify::semigroup_besov,
        "duhamel_besov" => verify::duhamel_besov,
        "bilinear_besov" => verify::bilinear_besov,
        "bilinear_exp" => verify::bilinear_exp,
        "uniform_decay" => verify::uniform_decay,
        "product_modulation" => verify::product_modulation,
        "linear_modulation" => verify::linear_modulation,
        "paraproduct_infty" => verify::paraproduct_infty,
        "nikolskij" => verify::nikolskij,
        "gevrey_equivalence" => verify::gevrey_equivalence,
        _ => return None,
    })
}

pub fn verify(id: &str, spec: &EnsembleSpec) -> Result<VerificationReport> {
    verify_with(id, spec, &VerifyOptions::default())
}

/// Runs every sample of `spec` through inequality `id` on each resolution.
pub fn verify_with(id: &str, spec: &EnsembleSpec, opts: &VerifyOptions) -> Result<VerificationReport> {
    let k = kernel(id).ok_or_else(|| {
        Error::Usage(format!("unknown inequality id `{id}`; expected one of {}", VERIFY_IDS.join(", ")))
    })?;
    spec.validate()?;
    opts.validate()?;
    let mut runs = Vec::with_capacity(spec.resolutions.len());
    for &n in &spec.resolutions {
        let grid = Grid::new(spec.n_dims, n)?;
        let ctx = Ctx {
            spec,
            opts,
            sys: Systems::new(&grid),
            grid,
            times: verify_times(opts.t_end),
        };
        let samples = (0..spec.n_samples)
            .into_par_iter()
            .map(|i| k(&ctx, i))
            .collect::<Result<Vec<_>>>()?;
        runs.push((ctx.sweep(), samples));
    }
    Ok(aggregate(id, spec, opts, &runs))
}

fn spread(max: f64, min: f64) -> f64 {
    if max == 0.0 && min == 0.0 {
        1.0
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn aggregate(
    id: &str,
    spec: &EnsembleSpec,
    opts: &VerifyOptions,
    runs: &[(RangeInclusive<i32>, Vec<Vec<Measurement>>)],
) -> VerificationReport {
    let nres = runs.len();
    let mut order: Vec<(String, bool)> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_case: Vec<Vec<f64>> = Vec::new();
    let mut per_shell: Vec<Vec<BTreeMap<i32, f64>>> = Vec::new();
    let mut per_sample = vec![0.0f64; spec.n_samples];
    let mut failures = Vec::new();
    for (r, (sweep, samples)) in runs.iter().enumerate() {
        for (i, ms) in samples.iter().enumerate() {
            for m in ms {
                let c = *index.entry(m.case.clone()).or_insert_with(|| {
                    order.push((m.case.clone(), m.gating));
                    per_case.push(vec![0.0; nres]);
                    per_shell.push(vec![BTreeMap::new(); nres]);
                    order.len() - 1
                });
                let ratio = m.ratio();
                if !(ratio.is_finite() && ratio >= 0.0) {
                    failures.push(SampleFailure {
                        sample: i,
                        resolution: spec.resolutions[r],
                        case: m.case.clone(),
                        shell: m.shell,
                        lhs: m.lhs,
                        rhs: m.rhs,
                    });
                    continue;
                }
                per_case[c][r] = per_case[c][r].max(ratio);
                if let Some(j) = m.shell.filter(|j| sweep.contains(j)) {
                    let e = per_shell[c][r].entry(j).or_insert(0.0);
                    *e = e.max(ratio);
                }
                if m.gating {
                    per_sample[i] = per_sample[i].max(ratio);
                }
            }
        }
    }
    let mut cases = Vec::with_capacity(order.len());
    for (c, (label, gating)) in order.into_iter().enumerate() {
        let ce = &per_case[c];
        let drift = ce
            .iter()
            .map(|&x| spread(x.max(ce[0]), x.min(ce[0])))
            .fold(1.0f64, f64::max);
        let shell_drift = per_shell[c]
            .iter()
            .filter(|m| m.len() >= 2)
            .map(|m| {
                let hi = m.values().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = m.values().cloned().fold(f64::INFINITY, f64::min);
                spread(hi, lo)
            })
            .reduce(f64::max);
        cases.push(CaseReport {
            label,
            gating,
            c_emp: ce.clone(),
            drift,
            shell_drift,
        });
    }
    let gating: Vec<&CaseReport> = cases.iter().filter(|c| c.gating).collect();
    let c_emp_by_resolution: Vec<f64> = (0..nres)
        .map(|r| gating.iter().map(|c| c.c_emp[r]).fold(0.0, f64::max))
        .collect();
    let c_emp = c_emp_by_resolution.iter().cloned().fold(0.0, f64::max);
    let resolution_drift = gating.iter().map(|c| c.drift).fold(1.0, f64::max);
    let shell_drift = gating.iter().filter_map(|c| c.shell_drift).reduce(f64::max);
    let pass = failures.is_empty() && c_emp.is_finite() && resolution_drift <= opts.drift_bound;
    VerificationReport {
        inequality_id: id.to_string(),
        resolutions: spec.resolutions.clone(),
        seed: spec.seed,
        per_sample_ratio: per_sample,
        c_emp,
        c_emp_by_resolution,
        resolution_drift,
        shell_drift,
        drift_bound: opts.drift_bound,
        pass,
        cases,
        failures,
    }
}

/// CSV with columns `id,C_emp_N<res>...,drift,shell_drift,pass`.
pub fn summary_csv(reports: &[VerificationReport]) -> String {
    let res: Vec<usize> = reports.first().map(|r| r.resolutions.clone()).unwrap_or_default();
    let mut out = String::from("id");
    for n in &res {
        out.push_str(&format!(",C_emp_N{n}"));
    }
    out.push_str(",drift,shell_drift,pass\n");
    for r in reports {
        out.push_str(&r.inequality_id);
        for c in &r.c_emp_by_resolution {
            out.push_str(&format!(",{c:.16e}"));
        }
        let sd = r.shell_drift.map_or(String::new(), |d| format!("{d:.16e}"));
        out.push_str(&format!(",{:.16e},{sd},{}\n", r.resolution_drift, r.pass));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_grid_shape() {
        let t = verify_times(2.0);
        assert_eq!(t.len(), 33);
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 2e-5).abs() < 1e-18);
        assert_eq!(t[32], 2.0);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn unknown_id_is_a_usage_error() {
        let spec = EnsembleSpec::new(10, FieldLaw::Analytic { rate: 0.5 }, 1);
        assert!(matches!(verify("young", &spec), Err(Error::Usage(_))));
    }

    #[test]
    fn aggregation_rules() {
        let spec = EnsembleSpec {
            resolutions: vec![32, 64],
            ..EnsembleSpec::new(10, FieldLaw::Analytic { rate: 0.5 }, 1)
        };
        let row = |a: f64| {
            vec![
                Measurement::new("a", a, 1.0).at_shell(2),
                Measurement::new("a", 0.5 * a, 1.0).at_shell(3),
                Measurement::new("b", 0.0, 0.0),
                Measurement::new("c", 9.0, 1.0).recorded_only(),
            ]
        };
        let mut s1 = vec![row(1.0); 10];
        s1[4] = row(1.5);
        let runs = vec![(2..=3, vec![row(1.0); 10]), (2..=4, s1)];
        let r = aggregate("x", &spec, &VerifyOptions::default(), &runs);
        assert_eq!(r.c_emp, 1.5);
        assert_eq!(r.c_emp_by_resolution, vec![1.0, 1.5]);
        assert_eq!(r.resolution_drift, 1.5);
        assert_eq!(r.shell_drift, Some(2.0));
        assert_eq!(r.per_sample_ratio[4], 1.5);
        assert!(r.pass);
        assert_eq!(r.cases[2].c_emp, vec![9.0, 9.0]);

        let mut bad = vec![row(1.0); 10];
        bad[0].push(Measurement::new("a", 1.0, 0.0));
        let runs = vec![(2..=3, bad)];
        let r = aggregate("x", &EnsembleSpec { resolutions: vec![32], ..spec }, &VerifyOptions::default(), &runs);
        assert!(!r.pass);
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].sample, 0);
    }
}
