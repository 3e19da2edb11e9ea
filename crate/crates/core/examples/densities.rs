//! Energy densities, their growth constants, the reduced membrane density
//! and its lamination envelope, and the scaling limit `g`.
//!
//!     cargo run --release --example densities

use nalgebra::DMatrix;
use neumann_sieve::energy::{
    default_schedule, g_limit, shared, validate_growth, AmplitudeGrid, EnergyDensity, EnvelopeApprox, GLimitOptions, InnerSolver,
    ReducedDensity,
};

fn main() -> neumann_sieve::Result<()> {
    let w = EnergyDensity::power(1, 3, 1.5)?;
    let f = DMatrix::from_row_slice(1, 3, &[0.3, -0.4, 1.2]);
    println!("|F|^1.5 at F = {:?}: {:.6}", f.as_slice(), w.eval(&f)?);

    let report = validate_growth(&w, 500, 10.0, 42);
    println!("growth: beta_affine = {:.4}, lipschitz = {:.4}, passed = {}", report.beta_affine, report.lipschitz, report.passed);

    // W̄(F̄) = min_z W(F̄ | z); for |F|^p the minimizer is z = 0
    let reduced = ReducedDensity::new(w.clone(), InnerSolver::default())?;
    let fbar = DMatrix::from_row_slice(1, 2, &[0.3, -0.4]);
    println!("W̄(0.3, -0.4) = {:.6} (|F̄|^1.5 = {:.6})", reduced.reduce_wbar(&fbar)?, 0.5f64.powf(1.5));

    // a double well relaxes to zero between the wells
    let well = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
    let dw = EnergyDensity::double_well(2.0, &well)?;
    let bar = shared(ReducedDensity::new(dw.clone(), InnerSolver::default())?);
    let env = EnvelopeApprox::new(bar.clone(), 2, 16, AmplitudeGrid::centered(2, 3.0, 61))?;
    for x in [0.0, 0.5, 1.0, 1.5] {
        let f = DMatrix::from_row_slice(1, 2, &[x, 0.0]);
        println!("double well at F̄ = ({x}, 0): W̄ = {:.4}, lamination = {:.4}", bar.value(&[x, 0.0], 0.0), env.laminate_envelope(&f)?.value);
    }

    let shifted = EnergyDensity::shifted(2.0, &DMatrix::from_row_slice(1, 3, &[0.5, 0.0, 0.0]))?;
    let at = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
    // the default schedule starts at r = 1, where the r² term still dominates
    println!("default schedule: {:?}", g_limit(&shifted, &at, &default_schedule(), &GLimitOptions::default()).map(|g| g.value));
    let g = g_limit(&shifted, &at, &[1e-2, 1e-3, 1e-4, 1e-5], &GLimitOptions::default())?;
    println!("g(1, 1, 0) for |F - A|^2: {:.8} (expected 2), rate {:?}", g.value, g.rate);
    Ok(())
}
