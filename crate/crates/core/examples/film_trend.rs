//! Recovery-style fields on real sieve films compared with the limit
//! energy, for a membrane-regime schedule and a sub-critical one.
//!
//!     cargo run --release --example film_trend

use neumann_sieve::energy::EnergyDensity;
use neumann_sieve::regime::{gamma_trend, RegimeSequences, Sequence, TrendOptions};

fn main() -> neumann_sieve::Result<()> {
    let w = EnergyDensity::power(1, 3, 1.5)?;
    let two = |e: f64| Sequence::power(2.0, e);
    let schedules = [("membrane", two(-5.0), two(-4.0)), ("sub-critical", two(-7.0), two(-6.0))];
    for (name, delta, r) in schedules {
        let seq = RegimeSequences { eps: two(-1.0), delta, r, n: 3, p: 1.5 };
        let rep = gamma_trend(&seq, &[1, 2, 3], (1.0, 0.0), &w, &TrendOptions::default())?;
        println!("{name}: {:?}, R = {:?}, φ = {:.6}", rep.label, rep.coefficient, rep.phi);
        for row in &rep.rows {
            println!(
                "  j = {}: N = {:>6}, {:>6} voxels, film {:.6}, limit {:.6}, gap {:.4}",
                row.j, row.n_cell, row.voxels, row.film, row.limit, row.gap
            );
        }
        println!("  passed = {}", rep.passed);
    }
    Ok(())
}
