//! The rescaled Poincaré constant does not depend on (ρ, δ).
//!
//!     cargo run --release --example poincare

use neumann_sieve::regime::{poincare_check, Profile, Shape};

fn main() -> neumann_sieve::Result<()> {
    let scales = [1.0, 1e-1, 1e-2, 1e-3];
    let rep = poincare_check(Shape::Square, 2.0, &[1.0, 1e-3], &[1.0, 1e-2], &[Profile::Linear], 8)?;
    println!("u = x1 on the unit square: ratio {:.12} (1/12 = {:.12})", rep.rows[0].ratio, 1.0 / 12.0);
    for shape in [Shape::Square, Shape::Ball, Shape::Pair] {
        let rep = poincare_check(shape, 1.5, &scales, &scales, &[Profile::Linear, Profile::Mixed], 16)?;
        let max = rep.max_by_scale.iter().map(|m| m.2).fold(0.0, f64::max);
        println!("{shape:?}: max ratio {max:.6}, variation over scales {:.1e}", rep.variation);
    }
    Ok(())
}
