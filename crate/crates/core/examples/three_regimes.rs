//! φ in the three regimes, its p-homogeneity, and the approach of φ^(ℓ)
//! to the membrane value as ℓ grows.
//!
//!     cargo run --release --example three_regimes

use neumann_sieve::cell::{scan_ell_continuity, solve_phi, CellProblemSpec, CellRegime};
use neumann_sieve::energy::EnergyDensity;

fn main() -> neumann_sieve::Result<()> {
    let w = EnergyDensity::power(1, 4, 2.0)?;
    for regime in [CellRegime::Finite { ell: 1.0 }, CellRegime::Infinite, CellRegime::Zero] {
        let spec = CellProblemSpec::new(regime, vec![1.0], 3, w.clone())?;
        let one = solve_phi(&spec)?;
        let two = solve_phi(&spec.clone().with_z(vec![2.0])?)?;
        println!(
            "{:>8}: φ(1) = {:.5}, φ(2)/φ(1) = {:.5} (2^p = 4), φ_N = {:?}",
            regime.label(),
            one.phi_extrapolated,
            two.phi_extrapolated / one.phi_extrapolated,
            one.phi_by_n.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        );
    }
    let spec = CellProblemSpec::new(CellRegime::Infinite, vec![1.0], 3, w)?;
    let ells: Vec<CellRegime> = [1.0, 2.0, 4.0].iter().map(|&ell| CellRegime::Finite { ell }).collect();
    for row in scan_ell_continuity(&spec, &ells, 4.0)? {
        println!("ℓ = {:>3}: φ_4 = {:.5}, gap to membrane {:.3}", row.ell, row.phi, row.gap);
    }
    Ok(())
}
