use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{Command, ExperimentConfig};
use super::data::init_data;
use crate::analyticity::{gevrey_norm_monitor, growth_times, theorem_rate, radius_growth_experiment, radius_report_csv, MonitorReport};
use crate::error::{Error, Result};
use crate::estimates::{calibrate, summary_csv, verify_with, EnsembleSpec};
use crate::semigroup::semigroup_trace;
use crate::solver::persist::write_file;
use crate::solver::stepper::norm_label;
use crate::solver::{picard_solve_with, smallness_check, step_solve_with, write_solve_dir, PicardMetric, SolverConfig};
use crate::spaces::{snapshot_norm, trace_norm, EvolutionTrace, NormFamily, NormSpec, Systems};
use crate::spectral::snapshot::write_snapshot;
use crate::spectral::{Grid, SpectralField};

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub library_version: String,
    pub command: Command,
    pub config: ExperimentConfig,
    pub files: Vec<FileDigest>,
}

pub const MANIFEST: &str = "manifest.json";

/// Runs a resolved config; returns the manifest (already written).
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let written = match cfg.command() {
        Command::Solve => run_solve(cfg, &dir)?,
        Command::Picard => run_picard(cfg, &dir)?,
        Command::Norms => run_norms(cfg, &dir)?,
        Command::Verify => run_verify(cfg, &dir)?,
        Command::Radius => run_radius(cfg, &dir)?,
    };
    let manifest = Manifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        command: cfg.command(),
        config: cfg.clone(),
        files: digests(&dir, &written)?,
    };
    write_file(&dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(manifest)
}

fn digests(dir: &Path, written: &[PathBuf]) -> Result<Vec<FileDigest>> {
    let mut out = Vec::with_capacity(written.len());
    for p in written {
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        let rel = p.strip_prefix(dir).unwrap_or(p);
        let path = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        out.push(FileDigest {
            path,
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    out.dedup_by(|a, b| a.path == b.path);
    Ok(out)
}

fn json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    write_file(&dir.join(name), serde_json::to_string_pretty(value)?.as_bytes())
}

fn calibration_family(metric: PicardMetric) -> NormFamily {
    match metric {
        PicardMetric::Modulation => NormFamily::ExpModulation,
        _ => NormFamily::Besov,
    }
}

/// The solver config with a calibrated constant filled in when the
/// smallness check will need one.
fn calibrated(
    cfg: &ExperimentConfig,
    u0: &SpectralField,
    sys: &Systems,
    dir: &Path,
    written: &mut Vec<PathBuf>,
) -> Result<SolverConfig> {
    let mut solver = cfg.solver.clone();
    if !solver.nonlinear || solver.override_smallness || solver.calibration_constant.is_some() {
        return Ok(solver);
    }
    // the zero datum passes without a constant
    if smallness_check(u0, &solver, sys)?.pass {
        return Ok(solver);
    }
    let grid = u0.grid();
    let ensemble = EnsembleSpec {
        n_samples: cfg.calibration.n_samples,
        field_law: cfg.calibration.field_law,
        resolutions: vec![grid.resolution()],
        seed: cfg.seed,
        n_dims: grid.n_dims(),
    };
    log::info!("calibrating C_emp for α = {} at N = {}", solver.alpha, grid.resolution());
    let rec = calibrate(
        solver.alpha,
        grid.n_dims(),
        grid.resolution(),
        calibration_family(solver.metric()),
        &ensemble,
    )?;
    written.push(json(dir, "calibration.json", &rec)?);
    solver.calibration_constant = Some(rec.c_emp);
    Ok(solver)
}

struct Prepared {
    grid: Grid,
    sys: Systems,
    solver: SolverConfig,
    u0: SpectralField,
}

fn prepare(cfg: &ExperimentConfig, dir: &Path, written: &mut Vec<PathBuf>) -> Result<Prepared> {
    let grid = cfg.grid()?;
    let sys = Systems::new(&grid);
    let u0 = init_data(cfg.data()?, &grid, &cfg.solver.smallness_norm(grid.n_dims()), cfg.seed)?;
    let solver = calibrated(cfg, &u0, &sys, dir, written)?;
    let (h, b) = write_snapshot(&u0, &dir.join("initial_state.json"))?;
    written.push(h);
    written.push(b);
    Ok(Prepared { grid, sys, solver, u0 })
}

fn run_solve(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let p = prepare(cfg, dir, &mut written)?;
    let tr = step_solve_with(&p.u0, &p.solver, &p.sys)?;
    written.extend(write_solve_dir(dir, &p.solver, &tr)?);
    Ok(written)
}

#[derive(Serialize)]
struct PicardOutput<'a> {
    smallness: crate::solver::Smallness,
    metric: PicardMetric,
    metric_norms: Vec<NormSpec>,
    times: Vec<f64>,
    report: &'a crate::solver::PicardReport,
}

fn run_picard(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let p = prepare(cfg, dir, &mut written)?;
    let smallness = smallness_check(&p.u0, &p.solver, &p.sys)?;
    let report = picard_solve_with(&p.u0, &p.solver, &p.sys, None)?;
    let out = PicardOutput {
        smallness,
        metric: p.solver.metric(),
        metric_norms: p.solver.metric_norms(p.grid.n_dims()),
        times: p.solver.picard_times(),
        report: &report,
    };
    written.push(json(dir, "picard_report.json", &out)?);
    let mut csv = String::from("iterate,distance,contraction_ratio\n");
    for (i, d) in report.iterate_distances.iter().enumerate() {
        let r = if i == 0 {
            String::new()
        } else {
            format!("{:.16e}", report.contraction_ratios[i - 1])
        };
        csv.push_str(&format!("{},{d:.16e},{r}\n", i + 1));
    }
    written.push(write_file(&dir.join("picard.csv"), csv.as_bytes())?);
    if let Some((_, last)) = report.final_trace.last() {
        let (h, b) = write_snapshot(last, &dir.join("final_state.json"))?;
        written.push(h);
        written.push(b);
    }
    Ok(written)
}

#[derive(Serialize)]
struct NormRow {
    label: String,
    spec: NormSpec,
    /// Snapshot norms at `t = 0`; time-space norms over the linear flow
    /// sampled on the Picard times.
    value: f64,
}

fn run_norms(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let grid = cfg.grid()?;
    let sys = Systems::new(&grid);
    let solver = &cfg.solver;
    let u0 = init_data(cfg.data()?, &grid, &solver.smallness_norm(grid.n_dims()), cfg.seed)?;
    let (h, b) = write_snapshot(&u0, &dir.join("initial_state.json"))?;
    written.push(h);
    written.push(b);
    let mut flow: Option<EvolutionTrace> = None;
    let mut rows = Vec::new();
    for (i, spec) in cfg.norms.iter().enumerate() {
        let value = if spec.gamma.is_some() {
            if flow.is_none() {
                flow = Some(semigroup_trace(&u0, &solver.picard_times(), solver.alpha)?);
            }
            trace_norm(flow.as_ref().expect("just set"), spec, &sys)?
        } else {
            snapshot_norm(&u0, 0.0, spec, &sys)?
        };
        rows.push(NormRow {
            label: norm_label(i, spec),
            spec: *spec,
            value,
        });
    }
    let mut csv = String::from("index,label,value\n");
    for (i, r) in rows.iter().enumerate() {
        csv.push_str(&format!("{i},{},{:.16e}\n", r.label, r.value));
    }
    written.push(write_file(&dir.join("norms.csv"), csv.as_bytes())?);
    written.push(json(dir, "norms.json", &rows)?);
    Ok(written)
}

fn run_verify(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = cfg.ensemble_spec();
    let opts = cfg.verify.options();
    let mut written = Vec::new();
    let mut reports = Vec::new();
    for id in &cfg.verify.ids {
        log::info!("verifying `{id}`");
        let r = verify_with(id, &spec, &opts)?;
        log::info!(
            "`{id}`: C_emp {:.4e}, drift {:.3}, pass {}",
            r.c_emp,
            r.resolution_drift,
            r.pass
        );
        written.push(json(dir, &format!("verify_{id}.json"), &r)?);
        reports.push(r);
    }
    written.push(write_file(&dir.join("summary.csv"), summary_csv(&reports).as_bytes())?);
    Ok(written)
}

#[derive(Serialize)]
struct GrowthOutput<'a> {
    alpha: f64,
    monitor_rate: f64,
    exponent: f64,
    target_exponent: f64,
    times: &'a [f64],
    report: &'a crate::analyticity::GrowthReport,
    monitor_times: Vec<f64>,
    monitor: MonitorReport,
}

fn run_radius(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let p = prepare(cfg, dir, &mut written)?;
    let alpha = p.solver.alpha;
    let times = match &cfg.radius.times {
        Some(t) => t.clone(),
        None => growth_times(&p.grid, alpha, cfg.radius.count)?,
    };
    let rep = radius_growth_experiment(&p.u0, alpha, &times, &p.solver)?;
    let mut tr = EvolutionTrace::new();
    tr.push(0.0, p.u0.clone())?;
    for (t, s) in rep.trace.times().iter().zip(rep.trace.states()) {
        tr.push(*t, s.clone())?;
    }
    let norm = NormSpec {
        weight: None,
        gamma: None,
        ..p.solver.smallness_norm(p.grid.n_dims())
    };
    let rate = cfg.radius.monitor_rate.unwrap_or(theorem_rate(alpha, p.grid.n_dims()));
    let monitor = gevrey_norm_monitor(&tr, alpha, rate, &norm)?;
    if let Some(t) = monitor.alarm_time {
        log::warn!("Gevrey norm doubled by t = {t}");
    }
    let out = GrowthOutput {
        alpha,
        monitor_rate: rate,
        exponent: rep.exponent,
        target_exponent: 1.0 / (2.0 * alpha),
        times: &times,
        report: &rep,
        monitor_times: tr.times().to_vec(),
        monitor,
    };
    written.push(json(dir, "growth_report.json", &out)?);
    written.push(write_file(&dir.join("radius.csv"), radius_report_csv(&rep.per_time).as_bytes())?);
    Ok(written)
}
