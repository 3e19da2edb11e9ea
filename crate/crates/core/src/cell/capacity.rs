use crate::error::{Error, Result};
use crate::mesh::sphere_area;

/// `Cap_p(B_{r_in}; B_{r_out})` in `R^d` from the radial minimizer.
/// `r_out` may be infinite.
pub fn radial_capacity(d: usize, p: f64, r_in: f64, r_out: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(format!("dimension {d} must be at least 2")));
    }
    if !(p > 1.0) || p >= d as f64 {
        return Err(Error::DegenerateCapacity { d, p });
    }
    if !(r_in > 0.0) || !(r_out > r_in) {
        return Err(Error::Domain(format!("need 0 < r_in < r_out, got {r_in}, {r_out}")));
    }
    // ∫ s^{-α} ds with α = (d-1)/(p-1) > 1
    let alpha = (d as f64 - 1.0) / (p - 1.0);
    let tail = |r: f64| if r.is_infinite() { 0.0 } else { r.powf(1.0 - alpha) / (alpha - 1.0) };
    let integral = tail(r_in) - tail(r_out);
    Ok(sphere_area(d) * integral.powf(1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        assert!((radial_capacity(3, 2.0, 1.0, 2.0).unwrap() - 8.0 * PI).abs() < 1e-12);
        assert!((radial_capacity(3, 2.0, 1.0, f64::INFINITY).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!(radial_capacity(3, 2.0, 1.0, 10.0).unwrap() > 4.0 * PI);
    }

    #[test]
    fn degenerate_and_domain() {
        assert!(matches!(radial_capacity(3, 3.0, 1.0, 2.0), Err(Error::DegenerateCapacity { .. })));
        assert!(matches!(radial_capacity(3, 2.0, 2.0, 1.0), Err(Error::Domain(_))));
    }
}
