use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gevrey_ns::cli::{run, Command, ExperimentConfig, OUTPUT_ENV};

#[derive(Parser)]
#[command(name = "gevrey-ns", version, about = "Fractional Navier-Stokes experiments on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// TOML experiment file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed` from the file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Exponential time stepping with per-step diagnostics.
    Solve,
    /// Picard iteration of the mild-solution map with contraction ratios.
    Picard,
    /// Norms of the initial datum.
    Norms,
    /// Empirical constants of the inequality suite.
    Verify,
    /// Analyticity-radius growth law.
    Radius,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Solve => Command::Solve,
            Sub::Picard => Command::Picard,
            Sub::Norms => Command::Norms,
            Sub::Verify => Command::Verify,
            Sub::Radius => Command::Radius,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    let Some(path) = cli.config else {
        eprintln!("error: --config <file> is required");
        return ExitCode::from(2);
    };
    let env_out = std::env::var_os(OUTPUT_ENV).map(PathBuf::from);
    let result = ExperimentConfig::load(&path)
        .and_then(|c| c.resolve(cli.command.into(), cli.seed, env_out))
        .and_then(|c| run(&c).map(|m| (c, m)));
    match result {
        Ok((c, m)) => {
            if !cli.quiet {
                println!("{} files written to {}", m.files.len() + 1, c.output_dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
