use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::DataSpec;
use crate::error::{Error, Result};
use crate::estimates::{EnsembleSpec, FieldLaw, VerifyOptions, VERIFY_IDS};
use crate::solver::SolverConfig;
use crate::spaces::NormSpec;
use crate::spectral::{Grid, GridParams};

/// Environment variable that replaces `output_dir`.
pub const OUTPUT_ENV: &str = "GEVREY_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Picard,
    Norms,
    Verify,
    Radius,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Picard => "picard",
            Command::Norms => "norms",
            Command::Verify => "verify",
            Command::Radius => "radius",
        }
    }
}

fn ten() -> usize {
    10
}

fn default_law() -> FieldLaw {
    FieldLaw::BlockSupported { index: 2 }
}

fn default_resolutions() -> Vec<usize> {
    vec![32, 64]
}

fn default_dims() -> usize {
    2
}

/// `[ensemble]`: the verify ensemble; its seed is the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "ten")]
    pub n_samples: usize,
    #[serde(default = "default_law")]
    pub field_law: FieldLaw,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_dims")]
    pub n_dims: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            n_samples: 10,
            field_law: default_law(),
            resolutions: default_resolutions(),
            n_dims: 2,
        }
    }
}

fn all_ids() -> Vec<String> {
    VERIFY_IDS.iter().map(|s| s.to_string()).collect()
}

fn default_alphas() -> Vec<f64> {
    VerifyOptions::default().alphas
}

fn default_drift() -> f64 {
    VerifyOptions::default().drift_bound
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "all_ids")]
    pub ids: Vec<String>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_drift")]
    pub drift_bound: f64,
    #[serde(default = "unit")]
    pub t_end: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection {
            ids: all_ids(),
            alphas: default_alphas(),
            drift_bound: default_drift(),
            t_end: 1.0,
        }
    }
}

impl VerifySection {
    pub fn options(&self) -> VerifyOptions {
        VerifyOptions {
            alphas: self.alphas.clone(),
            drift_bound: self.drift_bound,
            t_end: self.t_end,
        }
    }
}

fn eight() -> usize {
    8
}

/// `[radius]`: times default to [`crate::analyticity::growth_times`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSection {
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default = "eight")]
    pub count: usize,
    /// Rate `c` of the Gevrey-norm monitor; defaults to
    /// [`crate::analyticity::theorem_rate`].
    #[serde(default)]
    pub monitor_rate: Option<f64>,
}

impl Default for RadiusSection {
    fn default() -> Self {
        RadiusSection {
            times: None,
            count: 8,
            monitor_rate: None,
        }
    }
}

fn calibration_law() -> FieldLaw {
    FieldLaw::Analytic { rate: 0.5 }
}

/// `[calibration]`: ensemble used when `solver.calibration_constant` is
/// missing and the smallness override is off.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default = "ten")]
    pub n_samples: usize,
    #[serde(default = "calibration_law")]
    pub field_law: FieldLaw,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            n_samples: 10,
            field_law: calibration_law(),
        }
    }
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// One run, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional in the file; the subcommand on the command line wins and a
    /// conflicting value is an error.
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: Option<GridParams>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub data: Option<DataSpec>,
    #[serde(default)]
    pub norms: Vec<NormSpec>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub radius: RadiusSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let key = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().last().unwrap_or("").to_string())
                .unwrap_or_default();
            Error::validation(
                if key.trim().is_empty() { "config".to_string() } else { format!("config near `{}`", key.trim()) },
                e.message().to_string(),
            )
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Applies the subcommand, the seed override and `GEVREY_OUT`, then
    /// validates everything the command uses.
    pub fn resolve(mut self, command: Command, seed: Option<u64>, env_out: Option<PathBuf>) -> Result<Self> {
        if let Some(c) = self.command {
            if c != command {
                return Err(Error::validation(
                    "command",
                    format!("the file says `{}` but `{}` was requested", c.name(), command.name()),
                ));
            }
        }
        self.command = Some(command);
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(dir) = env_out {
            self.output_dir = dir;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn command(&self) -> Command {
        self.command.unwrap_or(Command::Solve)
    }

    pub fn grid(&self) -> Result<Grid> {
        let p = self
            .grid
            .as_ref()
            .ok_or_else(|| Error::validation("grid", format!("`{}` needs a [grid] section", self.command().name())))?;
        Grid::from_params(p).map_err(|e| Error::validation("grid", e.to_string()))
    }

    pub fn data(&self) -> Result<&DataSpec> {
        self.data
            .as_ref()
            .ok_or_else(|| Error::validation("data", format!("`{}` needs a [data] section", self.command().name())))
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            n_samples: self.ensemble.n_samples,
            field_law: self.ensemble.field_law,
            resolutions: self.ensemble.resolutions.clone(),
            seed: self.seed,
            n_dims: self.ensemble.n_dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::validation("output_dir", "empty path"));
        }
        match self.command() {
            Command::Verify => {
                self.ensemble_spec().validate()?;
                self.verify.options().validate()?;
                if self.verify.ids.is_empty() {
                    return Err(Error::validation("verify.ids", "empty list"));
                }
                for id in &self.verify.ids {
                    if !VERIFY_IDS.contains(&id.as_str()) {
                        return Err(Error::validation("verify.ids", format!("unknown id `{id}`")));
                    }
                }
            }
            cmd => {
                self.grid()?;
                self.data()?;
                self.solver.validate()?;
                if cmd == Command::Norms && self.norms.is_empty() {
                    return Err(Error::validation("norms", "`norms` needs at least one [[norms]] entry"));
                }
                for (i, n) in self.norms.iter().enumerate() {
                    n.validate()
                        .map_err(|e| Error::validation(format!("norms[{i}]"), e.to_string()))?;
                }
                if cmd == Command::Radius {
                    if self.radius.count < 2 {
                        return Err(Error::validation("radius.count", "must be at least 2"));
                    }
                    if let Some(c) = self.radius.monitor_rate {
                        if !(c.is_finite() && c >= 0.0) {
                            return Err(Error::validation("radius.monitor_rate", "must be finite and >= 0"));
                        }
                    }
                }
                if self.calibration.n_samples < 10 {
                    return Err(Error::validation("calibration.n_samples", "must be at least 10"));
                }
            }
        }
        Ok(())
    }
}
