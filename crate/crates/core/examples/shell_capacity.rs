//! Finite-element p-capacity of a spherical shell against the closed form,
//! with one Richardson step over two mesh levels.
//!
//!     cargo run --release --example shell_capacity

use neumann_sieve::cell::radial_capacity;
use neumann_sieve::energy::EnergyDensity;
use neumann_sieve::mesh::{build_annulus_mesh, BoundaryTag};
use neumann_sieve::solver::{minimize, BoundaryCondition, SolveOptions};

fn main() -> neumann_sieve::Result<()> {
    let bc = BoundaryCondition::new().with(BoundaryTag::Inner, vec![1.0])?.with(BoundaryTag::Outer, vec![0.0])?;
    for p in [1.5, 2.0] {
        let w = EnergyDensity::power(1, 3, p)?;
        let exact = radial_capacity(3, p, 1.0, 2.0)?;
        let mut e = Vec::new();
        for h in [0.1, 0.05] {
            let mesh = build_annulus_mesh(3, 1.0, 2.0, h, 1.0)?;
            let (_, diag) = minimize(&mesh, &w, &bc, 1.0, &SolveOptions::default())?;
            println!("p = {p}, h = {h}: energy {:.8} ({} iterations)", diag.final_energy, diag.iterations.iter().sum::<usize>());
            e.push(diag.final_energy);
        }
        let rich = e[1] + (e[1] - e[0]) / 3.0;
        println!("p = {p}: Richardson {:.8}, closed form {:.8}, rel. error {:.2e}", rich, exact, (rich - exact).abs() / exact);
    }
    Ok(())
}
