//! Upper bound `φ(z) <= β K |z|^p` and the Lipschitz-type estimate on
//! sampled jumps.
//!
//!     cargo run --release --example estimate_scans

use neumann_sieve::cell::{scan_lipschitz, scan_upper_bound, CellProblemSpec, CellRegime};
use neumann_sieve::energy::EnergyDensity;

fn main() -> neumann_sieve::Result<()> {
    let w = EnergyDensity::power(1, 4, 2.0)?;
    let zs: Vec<Vec<f64>> = [0.25, 0.5, 1.0, 2.0].iter().map(|&z| vec![z]).collect();
    for regime in [CellRegime::Finite { ell: 1.0 }, CellRegime::Infinite, CellRegime::Zero] {
        let spec = CellProblemSpec::new(regime, vec![1.0], 3, w.clone())?;
        let ub = scan_upper_bound(&spec, &zs)?;
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = zs.windows(2).map(|p| (p[0].clone(), p[1].clone())).collect();
        let lip = scan_lipschitz(&spec, &pairs)?;
        println!(
            "{:>8}: K = {:.4}, empirical c = {:.4}, bound passed = {}, worst Lipschitz ratio = {:.4}",
            regime.label(),
            ub.reference,
            ub.empirical_c,
            ub.passed,
            lip.worst
        );
    }
    Ok(())
}
