//! Config-driven experiment runner behind the `sieve` binary.

mod cache;
mod config;
mod run;

use std::path::PathBuf;

use clap::Parser;

pub use cache::{hash_of, Cache, CellKey, Lookup};
pub use config::{
    regime_of, CapacityConfig, CellConfig, Command, DensityConfig, DensityKind, ExperimentConfig, FilmConfig, Format, GeometryConfig,
    OutputConfig, PoincareConfig, RelaxConfig, SweepConfig, TrendConfig,
};
pub use run::{execute, exit_code, fmt_f, output_path, OperationRecord, RunManifest, RunOptions, RunSummary, Timing, VERSION};

#[derive(Debug, Parser)]
#[command(name = "sieve", version, about = "Run a configured thin-film sieve experiment")]
pub struct Args {
    /// Experiment file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent solves.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Recompute cell results even when cached.
    #[arg(long)]
    pub no_cache: bool,
}

/// Parses, runs and reports; returns the process exit status.
pub fn main_with(args: &Args) -> i32 {
    let result = ExperimentConfig::load(&args.config).and_then(|cfg| {
        let opts = RunOptions { out: args.out.clone(), workers: args.workers, seed: args.seed, no_cache: args.no_cache };
        execute(&cfg, &opts)
    });
    match result {
        Ok(summary) => {
            for f in &summary.manifest.outputs {
                println!("{}", summary.out_dir.join(f).display());
            }
            if summary.manifest.converged {
                0
            } else {
                eprintln!("warning: some solves did not converge; see manifest.json");
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
