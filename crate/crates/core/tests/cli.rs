use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_gevrey-ns");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env_remove("GEVREY_OUT")
        .args(args)
        .output()
        .unwrap()
}

fn with_config(text: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), text).unwrap();
    dir
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

const ZERO_PICARD: &str = r#"
output_dir = "out"
[grid]
n_dims = 2
resolution = 16
[solver]
picard_time_samples = 9
[data]
kind = "random_div_free"
amplitude = 0.0
"#;

#[test]
fn zero_datum_converges_without_calibration() {
    let dir = with_config(ZERO_PICARD);
    let o = run(dir.path(), &["--quiet", "--config", "run.toml", "picard"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let rep = json(&out.join("picard_report.json"));
    assert_eq!(rep["smallness"]["pass"], Value::Bool(true));
    assert_eq!(rep["report"]["converged"], Value::Bool(true));
    assert_eq!(rep["report"]["iterate_distances"], serde_json::json!([0.0]));
    assert!(!out.join("calibration.json").exists());
    let csv = std::fs::read_to_string(out.join("picard.csv")).unwrap();
    assert!(csv.starts_with("iterate,distance,contraction_ratio\n1,"));
}

#[test]
fn manifest_lists_every_artifact_with_its_digest() {
    let dir = with_config(ZERO_PICARD);
    assert_eq!(code(&run(dir.path(), &["-q", "--config", "run.toml", "picard"])), 0);
    let out = dir.path().join("out");
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["command"], "picard");
    assert_eq!(m["library_version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(m["config"]["output_dir"], "out");
    let files = m["files"].as_array().unwrap();
    let mut listed: Vec<String> = Vec::new();
    for f in files {
        let rel = f["path"].as_str().unwrap();
        let bytes = std::fs::read(out.join(rel)).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        listed.push(rel.to_string());
    }
    let mut on_disk: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
}

#[test]
fn environment_overrides_the_output_directory() {
    let dir = with_config(ZERO_PICARD);
    let o = Command::new(BIN)
        .current_dir(dir.path())
        .env("GEVREY_OUT", "elsewhere")
        .args(["-q", "--config", "run.toml", "picard"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("elsewhere/manifest.json").exists());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn validation_failures_exit_with_two() {
    let dir = with_config(ZERO_PICARD);
    let o = run(dir.path(), &["-q", "picard"]);
    assert_eq!(code(&o), 2);

    let dir = with_config(&ZERO_PICARD.replace("resolution = 16", "resolution = 15"));
    let o = run(dir.path(), &["-q", "--config", "run.toml", "picard"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("grid"));

    let dir = with_config(&format!("{ZERO_PICARD}\nunknown_key = 1\n"));
    assert_eq!(code(&run(dir.path(), &["-q", "--config", "run.toml", "picard"])), 2);

    // calibration ensembles need at least ten samples
    let dir = with_config(&ZERO_PICARD.replace("amplitude = 0.0", "amplitude = 0.1\n[calibration]\nn_samples = 3"));
    let o = run(dir.path(), &["-q", "--config", "run.toml", "picard"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("calibration.n_samples"));

    let dir = with_config("command = \"solve\"\n");
    assert_eq!(code(&run(dir.path(), &["-q", "--config", "run.toml", "verify"])), 2);
}

#[test]
fn taylor_green_has_no_radius_and_exits_with_three() {
    let dir = with_config(
        r#"
[grid]
n_dims = 2
resolution = 16
[solver]
override_smallness = true
[data]
kind = "taylor_green"
amplitude = 0.1
"#,
    );
    let o = run(dir.path(), &["-q", "--config", "run.toml", "radius"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn seeds_select_the_random_datum() {
    let text = r#"
output_dir = "out"
[grid]
n_dims = 2
resolution = 16
[solver]
T = 0.05
dt = 0.01
override_smallness = true
[data]
kind = "random_div_free"
amplitude = 0.1
"#;
    let read = |seed: &str| {
        let dir = with_config(text);
        assert_eq!(code(&run(dir.path(), &["-q", "--config", "run.toml", "--seed", seed, "solve"])), 0);
        let m = json(&dir.path().join("out/manifest.json"));
        assert_eq!(m["config"]["seed"].as_u64().unwrap(), seed.parse::<u64>().unwrap());
        std::fs::read(dir.path().join("out/diagnostics.csv")).unwrap()
    };
    assert_eq!(read("4"), read("4"));
    assert_ne!(read("4"), read("5"));
}
