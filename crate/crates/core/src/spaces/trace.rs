use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Fields sampled at strictly increasing times on one grid, with named
/// per-time diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    times: Vec<f64>,
    states: Vec<SpectralField>,
    diagnostics: Vec<BTreeMap<String, f64>>,
}

impl Default for EvolutionTrace {
    fn default() -> Self {
        Self::new()
    }
}

impl EvolutionTrace {
    pub fn new() -> Self {
        EvolutionTrace {
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    pub fn from_parts(times: Vec<f64>, states: Vec<SpectralField>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::RejectedInput(format!(
                "{} times but {} states",
                times.len(),
                states.len()
            )));
        }
        let mut tr = EvolutionTrace::new();
        for (t, s) in times.into_iter().zip(states) {
            tr.push(t, s)?;
        }
        Ok(tr)
    }

    pub fn push(&mut self, t: f64, state: SpectralField) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::RejectedInput(format!("time {t} is not finite")));
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::RejectedInput(format!(
                    "time {t} does not increase past {last}"
                )));
            }
        }
        if let Some(first) = self.states.first() {
            if first.grid() != state.grid() || first.components() != state.components() {
                return Err(Error::RejectedInput("trace states must share one grid".into()));
            }
        }
        self.times.push(t);
        self.states.push(state);
        self.diagnostics.push(BTreeMap::new());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &SpectralField {
        &self.states[i]
    }

    pub fn last(&self) -> Option<(f64, &SpectralField)> {
        self.times.last().map(|&t| (t, self.states.last().expect("same length")))
    }

    pub fn grid(&self) -> Option<&Grid> {
        self.states.first().map(|s| s.grid())
    }

    pub fn diagnostics(&self) -> &[BTreeMap<String, f64>] {
        &self.diagnostics
    }

    pub fn set_diagnostic(&mut self, i: usize, name: &str, value: f64) {
        self.diagnostics[i].insert(name.to_string(), value);
    }

    /// Diagnostic `name` across all times (NaN where missing).
    pub fn diagnostic_series(&self, name: &str) -> Vec<f64> {
        self.diagnostics
            .iter()
            .map(|d| d.get(name).copied().unwrap_or(f64::NAN))
            .collect()
    }

    /// The prefix of samples with `t ≤ t_end`.
    pub fn truncated(&self, t_end: f64) -> EvolutionTrace {
        let k = self.times.iter().take_while(|&&t| t <= t_end).count();
        EvolutionTrace {
            times: self.times[..k].to_vec(),
            states: self.states[..k].to_vec(),
            diagnostics: self.diagnostics[..k].to_vec(),
        }
    }

    /// Applies `f` to every state, keeping times.
    pub fn map_states(
        &self,
        f: impl Fn(f64, &SpectralField) -> Result<SpectralField>,
    ) -> Result<EvolutionTrace> {
        let states = self
            .times
            .iter()
            .zip(&self.states)
            .map(|(&t, s)| f(t, s))
            .collect::<Result<Vec<_>>>()?;
        EvolutionTrace::from_parts(self.times.clone(), states)
    }

    /// Pointwise difference of two traces on identical time grids.
    pub fn difference(&self, other: &EvolutionTrace) -> Result<EvolutionTrace> {
        if self.times != other.times {
            return Err(Error::RejectedInput("traces use different time grids".into()));
        }
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        EvolutionTrace::from_parts(self.times.clone(), states)
    }
}

/// `(∫ |g|^γ dt)^{1/γ}` by the trapezoid rule on the given nodes; `γ = ∞`
/// is the max. A single node with finite `γ` is an error.
pub fn time_norm(values: &[f64], times: &[f64], gamma: f64) -> Result<f64> {
    if gamma.is_infinite() {
        return Ok(values.iter().fold(0.0, |a, v| a.max(v.abs())));
    }
    if values.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "an L^{gamma} time norm needs at least two samples, got {}",
            values.len()
        )));
    }
    let top = values.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    if top == 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for i in 1..values.len() {
        let a = (values[i - 1].abs() / top).powf(gamma);
        let b = (values[i].abs() / top).powf(gamma);
        acc += 0.5 * (a + b) * (times[i] - times[i - 1]);
    }
    Ok(top * acc.powf(1.0 / gamma))
}
