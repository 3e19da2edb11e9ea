use std::f64::consts::SQRT_2;

use neumann_sieve::cell::{solve_truncated, CellProblemSpec, CellRegime};
use neumann_sieve::energy::EnergyDensity;
use neumann_sieve::mesh::MeshMode;

// [-N, N]² lies between the disks of radius N and N√2, and φ_N decreases
// with the domain, so the axisymmetric values bracket the full one. The
// voxel hole is an inscribed staircase and undershoots at coarse h.
#[test]
fn full_mesh_converges_into_axisymmetric_bracket() {
    let w = EnergyDensity::power(1, 3, 1.5).unwrap();
    let n = 2.0;
    let spec = |h: f64| {
        CellProblemSpec::new(CellRegime::Finite { ell: 1.0 }, vec![1.0], 2, w.clone())
            .unwrap()
            .with_truncations(vec![n, n * SQRT_2])
            .unwrap()
            .with_mesh(h, 1.15)
            .unwrap()
    };
    let inner = solve_truncated(&spec(0.125), n).unwrap().phi;
    let outer = solve_truncated(&spec(0.125), n * SQRT_2).unwrap().phi;
    assert!(outer < inner);
    let full = |h: f64| solve_truncated(&spec(h).with_mode(MeshMode::Full).unwrap(), n).unwrap().phi;
    let (coarse, fine) = (full(0.25), full(0.125));
    let below = |v: f64| (outer - v).max(0.0) / outer;
    println!("bracket [{outer:.5}, {inner:.5}], full {coarse:.5} -> {fine:.5}");
    assert!(fine > coarse && fine < inner);
    assert!(below(fine) < 0.25 * below(coarse) && below(fine) < 0.02, "{}", below(fine));
}
