//! P1 energies and their gradients with fixed-order reductions.

use nalgebra::DMatrix;

use super::{Field, SlitMesh};
use crate::energy::Density;
use crate::error::{Error, Result};
use crate::par;

/// Largest `m · cols` handled with stack buffers.
pub const MAX_ENTRIES: usize = 32;

/// Constant gradient of the P1 interpolant on element `e`, `m × dim` in
/// mesh coordinates.
pub fn element_gradient(mesh: &SlitMesh, field: &Field, e: usize) -> Result<DMatrix<f64>> {
    field.check(mesh)?;
    if e >= mesh.n_elements() {
        return Err(Error::OutOfRange { index: e, len: mesh.n_elements() });
    }
    let (m, dim) = (field.m, mesh.dim);
    let g = mesh.shape_gradients(e);
    let mut out = DMatrix::zeros(m, dim);
    for (a, &node) in mesh.element(e).iter().enumerate() {
        let u = field.at(node);
        for k in 0..dim {
            for i in 0..m {
                out[(i, k)] += u[i] * g[a * dim + k];
            }
        }
    }
    Ok(out)
}

/// `Σ_e w_e W((D_α ζ | scale · D_t ζ))` with the exact density.
pub fn integrate_energy(mesh: &SlitMesh, density: &dyn Density, field: &Field, vertical_scale: f64) -> Result<f64> {
    let en = Energy::new(mesh, density, field.m, vertical_scale)?;
    field.check(mesh)?;
    Ok(en.value(&field.values, 0.0))
}

/// Discrete energy of a density on a mesh, as a function of nodal values.
pub struct Energy<'a> {
    pub mesh: &'a SlitMesh,
    pub density: &'a dyn Density,
    pub m: usize,
    pub vertical_scale: f64,
    cols: usize,
}

impl<'a> Energy<'a> {
    pub fn new(mesh: &'a SlitMesh, density: &'a dyn Density, m: usize, vertical_scale: f64) -> Result<Self> {
        let cols = density.cols();
        if density.rows() != m {
            return Err(Error::FieldMismatch(format!("density has {} rows, field has m = {m}", density.rows())));
        }
        if cols < mesh.dim || m * cols > MAX_ENTRIES {
            return Err(Error::FieldMismatch(format!("density with {cols} columns does not fit a {}-dimensional mesh", mesh.dim)));
        }
        if !(vertical_scale > 0.0 && vertical_scale.is_finite()) {
            return Err(Error::Domain(format!("vertical scale must be positive, got {vertical_scale}")));
        }
        Ok(Self { mesh, density, m, vertical_scale, cols })
    }

    pub fn n_dofs(&self) -> usize {
        self.m * self.mesh.n_nodes()
    }

    fn axis_scale(&self, k: usize) -> f64 {
        if Some(k) == self.mesh.vertical_axis() {
            self.vertical_scale
        } else {
            1.0
        }
    }

    /// Density-shaped gradient of element `e`, written into `buf`.
    fn local(&self, u: &[f64], e: usize, buf: &mut [f64; MAX_ENTRIES]) {
        let (m, dim) = (self.m, self.mesh.dim);
        let g = self.mesh.shape_gradients(e);
        buf[..m * self.cols].iter_mut().for_each(|x| *x = 0.0);
        for (a, &node) in self.mesh.element(e).iter().enumerate() {
            let un = &u[node * m..(node + 1) * m];
            for k in 0..dim {
                let c = self.mesh.column_of(k, self.cols);
                let gk = g[a * dim + k] * self.axis_scale(k);
                for i in 0..m {
                    buf[c * m + i] += un[i] * gk;
                }
            }
        }
    }

    pub fn element_energy(&self, u: &[f64], e: usize, reg: f64) -> f64 {
        let mut buf = [0.0; MAX_ENTRIES];
        self.local(u, e, &mut buf);
        self.mesh.weights[e] * self.density.value(&buf[..self.m * self.cols], reg)
    }

    pub fn value(&self, u: &[f64], reg: f64) -> f64 {
        par::sum_by(self.mesh.n_elements(), |e| self.element_energy(u, e, reg))
    }

    /// Writes the gradient into `out` and returns the energy.
    pub fn gradient(&self, u: &[f64], reg: f64, out: &mut [f64]) -> f64 {
        let (m, dim) = (self.m, self.mesh.dim);
        let k = dim + 1;
        let stride = k * m + 1;
        let mut local = vec![0.0; self.mesh.n_elements() * stride];
        par::fill_chunks(&mut local, stride, |e, chunk| {
            let mut buf = [0.0; MAX_ENTRIES];
            let mut dw = [0.0; MAX_ENTRIES];
            self.local(u, e, &mut buf);
            let f = &buf[..m * self.cols];
            let w = self.mesh.weights[e];
            chunk[k * m] = w * self.density.value(f, reg);
            self.density.gradient(f, reg, &mut dw[..m * self.cols]);
            let g = self.mesh.shape_gradients(e);
            for a in 0..k {
                for i in 0..m {
                    let mut acc = 0.0;
                    for kk in 0..dim {
                        let c = self.mesh.column_of(kk, self.cols);
                        acc += dw[c * m + i] * g[a * dim + kk] * self.axis_scale(kk);
                    }
                    chunk[a * m + i] = w * acc;
                }
            }
        });
        out.iter_mut().for_each(|x| *x = 0.0);
        for e in 0..self.mesh.n_elements() {
            let chunk = &local[e * stride..(e + 1) * stride];
            for (a, &node) in self.mesh.element(e).iter().enumerate() {
                for i in 0..m {
                    out[node * m + i] += chunk[a * m + i];
                }
            }
        }
        par::sum_by(self.mesh.n_elements(), |e| local[e * stride + k * m])
    }

    /// Diagonal estimate of the Hessian, used as preconditioner.
    pub fn diagonal(&self, u: &[f64], reg: f64) -> Vec<f64> {
        let (m, dim) = (self.m, self.mesh.dim);
        let mut diag = vec![0.0; self.n_dofs()];
        let mut buf = [0.0; MAX_ENTRIES];
        for e in 0..self.mesh.n_elements() {
            self.local(u, e, &mut buf);
            let stiff = self.mesh.weights[e] * self.density.stiffness(&buf[..m * self.cols], reg);
            let g = self.mesh.shape_gradients(e);
            for (a, &node) in self.mesh.element(e).iter().enumerate() {
                let s: f64 = (0..dim).map(|kk| (g[a * dim + kk] * self.axis_scale(kk)).powi(2)).sum();
                for i in 0..m {
                    diag[node * m + i] += stiff * s;
                }
            }
        }
        diag
    }
}
