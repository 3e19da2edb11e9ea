//! The membrane interfacial density for the scalar Dirichlet energy in
//! d = 3: `φ(1) = 2^{1-p} Cap_p(B_1) = 2π`.
//!
//!     cargo run --release --example membrane_phi

use std::f64::consts::PI;

use neumann_sieve::cell::{solve_phi, CellProblemSpec, CellRegime};
use neumann_sieve::energy::EnergyDensity;

fn main() -> neumann_sieve::Result<()> {
    let w = EnergyDensity::power(1, 4, 2.0)?;
    let spec = CellProblemSpec::new(CellRegime::Infinite, vec![1.0], 3, w)?.with_truncations(vec![4.0, 8.0, 16.0, 32.0])?;
    let r = solve_phi(&spec)?;
    for (n, phi) in r.n_list.iter().zip(&r.phi_by_n) {
        println!("N = {n:>4}: φ_N = {phi:.6}");
    }
    println!("extrapolated {:.6}, oracle 2π = {:.6}, trace deviation {:.1e}", r.phi_extrapolated, 2.0 * PI, r.trace_mean_dev);
    Ok(())
}
