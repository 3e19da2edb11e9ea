//! Runs an experiment config through the library, as the `sieve` binary
//! does, and prints the manifest.
//!
//!     cargo run --release --example run_config -- configs/capacity.toml

use std::path::PathBuf;

use neumann_sieve::cli::{execute, ExperimentConfig, RunOptions};

fn main() -> neumann_sieve::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/capacity.toml").into());
    let cfg = ExperimentConfig::load(path.as_ref())?;
    let out = std::env::temp_dir().join("sieve-example");
    let summary = execute(&cfg, &RunOptions { out: Some(PathBuf::from(&out)), ..Default::default() })?;
    println!("{}", serde_json::to_string_pretty(&summary.manifest)?);
    for f in &summary.manifest.outputs {
        if f.ends_with(".csv") {
            println!("--- {f}\n{}", std::fs::read_to_string(out.join(f)).unwrap_or_default());
        }
    }
    Ok(())
}
