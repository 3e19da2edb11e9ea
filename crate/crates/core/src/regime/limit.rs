use serde::{Deserialize, Serialize};

use crate::energy::Density;
use crate::error::{Error, Result};

/// Uniform rectangular grid over `ω = (x0, x1) × (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarGrid {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl PlanarGrid {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) || nx == 0 || ny == 0 {
            return Err(Error::Domain("grid needs a non-empty rectangle and at least one cell".into()));
        }
        Ok(Self { x0, x1, y0, y1, nx, ny })
    }
    pub fn unit(n: usize) -> Self {
        Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0, nx: n, ny: n }
    }
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }
    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }
    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / self.ny as f64
    }
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.hx(), self.y0 + j as f64 * self.hy())
    }
}

/// Nodal values on a [`PlanarGrid`], `m` per node, row-major in `(j, i)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    pub grid: PlanarGrid,
    pub m: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn from_fn<F: Fn(f64, f64, &mut [f64])>(grid: PlanarGrid, m: usize, f: F) -> Self {
        let mut values = vec![0.0; m * grid.n_nodes()];
        for j in 0..=grid.ny {
            for i in 0..=grid.nx {
                let (x, y) = grid.point(i, j);
                let k = j * (grid.nx + 1) + i;
                f(x, y, &mut values[k * m..(k + 1) * m]);
            }
        }
        Self { grid, m, values }
    }

    fn at(&self, i: usize, j: usize) -> &[f64] {
        let k = j * (self.grid.nx + 1) + i;
        &self.values[k * self.m..(k + 1) * self.m]
    }

    /// Bilinear value and gradient (column-major `m × 2`) at the centre of
    /// cell `(i, j)`.
    fn midpoint(&self, i: usize, j: usize, value: &mut [f64], grad: &mut [f64]) {
        let (hx, hy) = (self.grid.hx(), self.grid.hy());
        let (a, b, c, d) = (self.at(i, j), self.at(i + 1, j), self.at(i, j + 1), self.at(i + 1, j + 1));
        let m = self.m;
        for k in 0..m {
            value[k] = 0.25 * (a[k] + b[k] + c[k] + d[k]);
            grad[k] = 0.5 * ((b[k] - a[k]) + (d[k] - c[k])) / hx;
            grad[m + k] = 0.5 * ((c[k] - a[k]) + (d[k] - b[k])) / hy;
        }
    }
}

/// Interfacial density `φ` as used in the limit functional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PhiTable {
    /// `φ(z) = c |z|^p` for p-homogeneous isotropic `g`.
    Homogeneous { p: f64, unit_value: f64 },
    /// Piecewise-linear in `|z|` over increasing norms starting at 0.
    Radial { norms: Vec<f64>, values: Vec<f64> },
    /// Piecewise-linear in a scalar `z` over increasing nodes.
    Scalar { z: Vec<f64>, values: Vec<f64> },
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    if !(x >= lo - 1e-14 * hi.abs() && x <= hi * (1.0 + 1e-14) + 1e-300) {
        return Err(Error::TableRange { requested: x, min: lo, max: hi });
    }
    let k = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1);
    let w = ((x - xs[k - 1]) / (xs[k] - xs[k - 1])).clamp(0.0, 1.0);
    Ok(ys[k - 1] * (1.0 - w) + ys[k] * w)
}

impl PhiTable {
    pub fn validate(&self) -> Result<()> {
        let check = |xs: &[f64], ys: &[f64]| {
            if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Domain("φ table needs at least two increasing nodes".into()));
            }
            Ok(())
        };
        match self {
            PhiTable::Homogeneous { p, unit_value } => {
                if !(*p > 1.0) || !(*unit_value >= 0.0) {
                    return Err(Error::Domain("homogeneous φ needs p > 1 and a non-negative value".into()));
                }
                Ok(())
            }
            PhiTable::Radial { norms, values } => {
                check(norms, values)?;
                if norms[0] != 0.0 {
                    return Err(Error::Domain("radial φ table must start at |z| = 0".into()));
                }
                Ok(())
            }
            PhiTable::Scalar { z, values } => check(z, values),
        }
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        match self {
            PhiTable::Homogeneous { p, unit_value } => Ok(unit_value * norm.powf(*p)),
            PhiTable::Radial { norms, values } => interp(norms, values, norm),
            PhiTable::Scalar { z: nodes, values } => {
                if z.len() != 1 {
                    return Err(Error::Domain("scalar φ table used with vector jump".into()));
                }
                interp(nodes, values, z[0])
            }
        }
    }
}

/// `∫ QW̄(D u⁺) + ∫ QW̄(D u⁻) + R ∫ φ(u⁺ - u⁻)` with midpoint quadrature.
pub fn assemble_limit(u_plus: &GridField, u_minus: &GridField, relaxed: &dyn Density, r_coef: f64, phi: &PhiTable) -> Result<f64> {
    if u_plus.grid != u_minus.grid || u_plus.m != u_minus.m {
        return Err(Error::FieldMismatch("u⁺ and u⁻ live on different grids".into()));
    }
    let m = u_plus.m;
    if relaxed.rows() != m || relaxed.cols() != 2 {
        return Err(Error::FieldMismatch(format!("relaxed density must act on {m}×2 matrices")));
    }
    if !(r_coef >= 0.0 && r_coef.is_finite()) {
        return Err(Error::Domain(format!("interfacial coefficient must be finite and non-negative, got {r_coef}")));
    }
    phi.validate()?;
    let g = u_plus.grid;
    let area = g.hx() * g.hy();
    let (mut vp, mut vm) = (vec![0.0; m], vec![0.0; m]);
    let (mut gp, mut gm) = (vec![0.0; 2 * m], vec![0.0; 2 * m]);
    let mut total = 0.0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            u_plus.midpoint(i, j, &mut vp, &mut gp);
            u_minus.midpoint(i, j, &mut vm, &mut gm);
            let jump: Vec<f64> = vp.iter().zip(&vm).map(|(a, b)| a - b).collect();
            let membrane = relaxed.value(&gp, 0.0) + relaxed.value(&gm, 0.0);
            total += area * (membrane + r_coef * phi.eval(&jump)?);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyDensity;

    #[test]
    fn constants_give_phi() {
        let grid = PlanarGrid::unit(4);
        let w = EnergyDensity::power(1, 2, 1.5).unwrap();
        let phi = PhiTable::Homogeneous { p: 1.5, unit_value: 3.0 };
        let up = GridField::from_fn(grid, 1, |_, _, o| o[0] = 2.0);
        let um = GridField::from_fn(grid, 1, |_, _, o| o[0] = 0.0);
        let e = assemble_limit(&up, &um, &w, 1.0, &phi).unwrap();
        assert!((e - 3.0 * 2f64.powf(1.5)).abs() < 1e-12);
        assert_eq!(assemble_limit(&up, &up, &w, 1.0, &phi).unwrap(), 0.0);
    }

    #[test]
    fn affine_layers() {
        let grid = PlanarGrid::new(0.0, 2.0, 0.0, 1.0, 8, 3).unwrap();
        let w = EnergyDensity::power(1, 2, 2.0).unwrap();
        let phi = PhiTable::Radial { norms: vec![0.0, 1.0], values: vec![0.0, 5.0] };
        let up = GridField::from_fn(grid, 1, |x, y, o| o[0] = 0.3 * x - 0.4 * y);
        let um = GridField::from_fn(grid, 1, |x, y, o| o[0] = 0.3 * x - 0.4 * y - 0.5);
        let e = assemble_limit(&up, &um, &w, 2.0, &phi).unwrap();
        // |ω| (2 |F̄|² + R φ(0.5))
        assert!((e - 2.0 * (2.0 * 0.25 + 2.0 * 2.5)).abs() < 1e-12);
    }

    #[test]
    fn table_range_is_enforced() {
        let phi = PhiTable::Radial { norms: vec![0.0, 1.0], values: vec![0.0, 1.0] };
        let e = phi.eval(&[2.0]).unwrap_err();
        assert!(matches!(e, Error::TableRange { .. }));
        assert!(e.to_string().contains("[0, 1]"));
    }
}
