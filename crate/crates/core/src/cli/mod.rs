//! Batch driver behind the `gevrey-ns` binary: TOML configs, the datum
//! library, the five subcommands and the digest manifest.

pub mod config;
pub mod data;
pub mod run;

pub use config::{Command, ExperimentConfig, OUTPUT_ENV};
pub use data::{init_data, taylor_green, DataSpec};
pub use run::{run, FileDigest, Manifest, MANIFEST};
