use std::fs;
use std::path::{Path, PathBuf};

use super::config::SolverConfig;
use super::stepper::norm_label;
use crate::error::{Error, Result};
use crate::spaces::EvolutionTrace;
use crate::spectral::snapshot::write_snapshot;

/// Fixed leading and trailing columns of `diagnostics.csv`; the configured
/// norms sit between them.
pub fn diagnostics_columns(cfg: &SolverConfig) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "energy".to_string()];
    cols.extend(cfg.continuation_norms.iter().enumerate().map(|(i, s)| norm_label(i, s)));
    cols.push("gevrey_norm".into());
    cols.push("continuation_functional".into());
    cols
}

pub fn diagnostics_csv(tr: &EvolutionTrace, cfg: &SolverConfig) -> String {
    let cols = diagnostics_columns(cfg);
    let mut out = cols.join(",");
    out.push('\n');
    for (i, t) in tr.times().iter().enumerate() {
        let d = &tr.diagnostics()[i];
        let mut row = vec![format!("{t:.16e}")];
        for c in &cols[1..] {
            row.push(format!("{:.16e}", d.get(c).copied().unwrap_or(f64::NAN)));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// Writes `config.json`, `snapshots/state_NNNN.{json,bin}` and
/// `diagnostics.csv` under `dir`; returns every path written.
pub fn write_solve_dir(dir: &Path, cfg: &SolverConfig, tr: &EvolutionTrace) -> Result<Vec<PathBuf>> {
    let snaps = dir.join("snapshots");
    fs::create_dir_all(&snaps).map_err(|e| Error::io(&snaps, e))?;
    let mut written = Vec::new();
    let cfg_json = serde_json::to_string_pretty(cfg)?;
    written.push(write_file(&dir.join("config.json"), cfg_json.as_bytes())?);
    for (i, s) in tr.states().iter().enumerate() {
        let (h, b) = write_snapshot(s, &snaps.join(format!("state_{i:04}.json")))?;
        written.push(h);
        written.push(b);
    }
    let csv = diagnostics_csv(tr, cfg);
    written.push(write_file(&dir.join("diagnostics.csv"), csv.as_bytes())?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormSpec;
    use crate::spectral::{Grid, SpectralField};

    #[test]
    fn csv_has_fixed_columns() {
        let g = Grid::new(2, 8).unwrap();
        let mut tr = EvolutionTrace::new();
        tr.push(0.0, SpectralField::zeros(&g, 2)).unwrap();
        tr.set_diagnostic(0, "energy", 0.25);
        let cfg = SolverConfig {
            continuation_norms: vec![NormSpec::besov(0.0, 2.0, 2.0)],
            ..Default::default()
        };
        let csv = diagnostics_csv(&tr, &cfg);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,energy,norm0_besov_s0_p2_q2,gevrey_norm,continuation_functional"
        );
        assert!(lines.next().unwrap().starts_with("0.0000000000000000e0,2.5000000000000000e-1,"));
    }
}
