//! Slit meshes: duplicated nodes on the film plane outside the hole, shared
//! nodes inside it.
//!
//!     cargo run --release --example slit_mesh

use neumann_sieve::mesh::{build_membrane_mesh, build_slit_mesh, sphere_area, CellDomainSpec, MeshMode};

fn main() -> neumann_sieve::Result<()> {
    let spec = CellDomainSpec::axisymmetric(3, 4.0, 1.0, 0.5, 1.0);
    let mesh = build_slit_mesh(&spec)?;
    println!("axisymmetric d=3, N=4, h=0.5: {} nodes, {} triangles", mesh.n_nodes(), mesh.n_elements());
    let s = |i: usize| mesh.node(i)[0];
    println!("  slit pairs at s = {:?}", mesh.slit_pairs.iter().map(|&(u, _)| s(u)).collect::<Vec<_>>());
    println!("  shared hole nodes at s = {:?}", mesh.shared_hole_nodes.iter().map(|&i| s(i)).collect::<Vec<_>>());
    // weights integrate s^{d-1} |S^{d-1}| over the cylinder
    let exact = sphere_area(3) / 3.0 * 4f64.powi(3) * 2.0;
    println!("  volume {:.6} vs {:.6}", mesh.total_weight(), exact);

    let graded = build_slit_mesh(&CellDomainSpec::axisymmetric(3, 16.0, 1.0, 0.25, 1.15))?;
    println!("graded N=16: {} nodes", graded.n_nodes());

    let full = build_slit_mesh(&CellDomainSpec { mode: MeshMode::Full, ..CellDomainSpec::axisymmetric(2, 3.0, 1.0, 0.5, 1.0) })?;
    println!("full 3D voxel slit, N=3: {} nodes, {} tetrahedra, {} slit pairs", full.n_nodes(), full.n_elements(), full.slit_pairs.len());

    let membrane = build_membrane_mesh(3, 8.0, 0.25, 1.15, &[])?;
    println!("membrane pair on [0, 8]: {} nodes, {} segments", membrane.n_nodes(), membrane.n_elements());
    Ok(())
}
