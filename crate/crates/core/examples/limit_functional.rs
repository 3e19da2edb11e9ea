//! The limit energy of two membranes coupled through the interfacial term.
//!
//!     cargo run --release --example limit_functional

use neumann_sieve::cell::radial_capacity;
use neumann_sieve::energy::EnergyDensity;
use neumann_sieve::regime::{assemble_limit, GridField, PhiTable, PlanarGrid};

fn main() -> neumann_sieve::Result<()> {
    let p = 1.5;
    // Q W̄ for |F|^p is |F̄|^p, a 1 × 2 density
    let membrane = EnergyDensity::power(1, 2, p)?;
    let unit = 2.0 * radial_capacity(2, p, 1.0, f64::INFINITY)? * 0.5f64.powf(p);
    let phi = PhiTable::Homogeneous { p, unit_value: unit };
    let grid = PlanarGrid::unit(32);
    let up = GridField::from_fn(grid, 1, |x, y, o| o[0] = 1.0 + 0.2 * (x - y));
    let lo = GridField::from_fn(grid, 1, |x, _, o| o[0] = 0.1 * x);
    for r in [0.0, 0.5, 1.0, 2.0] {
        println!("R = {r}: F = {:.6}", assemble_limit(&up, &lo, &membrane, r, &phi)?);
    }
    let table = PhiTable::Radial { norms: vec![0.0, 0.5, 1.0, 2.0], values: vec![0.0, unit * 0.5f64.powf(p), unit, unit * 2f64.powf(p)] };
    println!("tabulated φ: {:.6}", assemble_limit(&up, &lo, &membrane, 1.0, &table)?);
    let far = GridField::from_fn(grid, 1, |_, _, o| o[0] = 3.0);
    println!("beyond the table: {}", assemble_limit(&far, &lo, &membrane, 1.0, &table).unwrap_err());
    Ok(())
}
