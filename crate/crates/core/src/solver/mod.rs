//! Dirichlet minimization of discrete energies with regularization
//! continuation.

mod lbfgs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::Density;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, Energy, Field, SlitMesh};

/// Constant values imposed on tagged boundary nodes; other tags are free.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub assignments: Vec<(BoundaryTag, Vec<f64>)>,
}

impl BoundaryCondition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, tag: BoundaryTag, value: Vec<f64>) -> Result<Self> {
        if self.assignments.iter().any(|(t, _)| *t == tag) {
            return Err(Error::BoundaryCondition(format!("tag {tag:?} assigned twice")));
        }
        if value.iter().any(|v| !v.is_finite()) {
            return Err(Error::BoundaryCondition(format!("non-finite value for {tag:?}")));
        }
        self.assignments.push((tag, value));
        Ok(self)
    }

    /// `z` on the upper lateral boundary, `0` on the lower one.
    pub fn jump(z: &[f64]) -> Result<Self> {
        Self::new().with(BoundaryTag::LateralUpper, z.to_vec())?.with(BoundaryTag::LateralLower, vec![0.0; z.len()])
    }

    pub fn value(&self, tag: BoundaryTag) -> Option<&[f64]> {
        self.assignments.iter().find(|(t, _)| *t == tag).map(|(_, v)| v.as_slice())
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.assignments.is_empty() {
            return Err(Error::BoundaryCondition("at least one tag must be constrained".into()));
        }
        for (tag, v) in &self.assignments {
            if v.len() != m {
                return Err(Error::BoundaryCondition(format!("{tag:?} carries {} values, expected {m}", v.len())));
            }
        }
        Ok(())
    }

    /// Writes imposed values into `values` and returns the free mask.
    /// Later assignments win at nodes carrying several tags.
    fn apply(&self, mesh: &SlitMesh, m: usize, values: &mut [f64]) -> Vec<bool> {
        let mut free = vec![true; values.len()];
        for (tag, v) in &self.assignments {
            for node in mesh.nodes_with(*tag) {
                values[node * m..(node + 1) * m].copy_from_slice(v);
                free[node * m..(node + 1) * m].iter_mut().for_each(|f| *f = false);
            }
        }
        free
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// Stopping tolerance on the free gradient norm, relative to its value
    /// at the initial guess.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Regularization values, strictly decreasing.
    pub continuation: Vec<f64>,
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-8, max_iters: 20_000, continuation: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6], memory: 10, c1: 1e-4, c2: 0.9 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) || self.max_iters == 0 || self.memory == 0 {
            return Err(Error::SolverOptions("tolerance, iteration cap and memory must be positive".into()));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::SolverOptions("line search needs 0 < c1 < c2 < 1".into()));
        }
        if self.continuation.is_empty()
            || self.continuation.iter().any(|e| !(*e >= 0.0) || !e.is_finite())
            || self.continuation.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::SolverOptions("continuation must be non-empty, non-negative and strictly decreasing".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub reg: f64,
    pub iterations: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub converged: bool,
    /// Accepted iterates never increased the energy.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// Unregularized energy of the returned field.
    pub final_energy: f64,
    /// Energy with the last regularization value.
    pub regularized_energy: f64,
    pub regularization_gap: f64,
    /// Free gradient norm at the end of the last stage.
    pub grad_norm: f64,
    pub initial_grad_norm: f64,
    pub iterations: Vec<usize>,
    pub monotone: bool,
    pub converged: bool,
    pub stages: Vec<StageReport>,
}

/// Initial guess: upper data above the mid-plane, lower data below, their
/// mean on shared nodes.
pub fn initial_guess(mesh: &SlitMesh, bc: &BoundaryCondition, m: usize) -> Field {
    let pick = |tags: &[BoundaryTag]| tags.iter().find_map(|t| bc.value(*t)).map(|v| v.to_vec());
    let mean = {
        let mut acc = vec![0.0; m];
        for (_, v) in &bc.assignments {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x / bc.assignments.len() as f64;
            }
        }
        acc
    };
    let up = pick(&[BoundaryTag::LateralUpper, BoundaryTag::TopCap]).unwrap_or_else(|| mean.clone());
    let lo = pick(&[BoundaryTag::LateralLower, BoundaryTag::BottomCap]).unwrap_or_else(|| mean.clone());
    Field::from_fn(mesh, m, |_, _, side, out| {
        for i in 0..m {
            out[i] = match side {
                1 => up[i],
                -1 => lo[i],
                _ => 0.5 * (up[i] + lo[i]),
            };
        }
    })
}

/// Minimizes the discrete energy from [`initial_guess`].
pub fn minimize(
    mesh: &SlitMesh,
    density: &dyn Density,
    bc: &BoundaryCondition,
    vertical_scale: f64,
    opts: &SolveOptions,
) -> Result<(Field, SolveDiagnostics)> {
    let init = initial_guess(mesh, bc, density.rows());
    minimize_from(mesh, density, bc, vertical_scale, opts, init)
}

/// Minimizes starting from `init`; boundary values overwrite it.
pub fn minimize_from(
    mesh: &SlitMesh,
    density: &dyn Density,
    bc: &BoundaryCondition,
    vertical_scale: f64,
    opts: &SolveOptions,
    init: Field,
) -> Result<(Field, SolveDiagnostics)> {
    opts.validate()?;
    let m = density.rows();
    bc.validate(m)?;
    init.check(mesh)?;
    if init.m != m {
        return Err(Error::FieldMismatch(format!("initial field has m = {}, density {m}", init.m)));
    }
    let energy = Energy::new(mesh, density, m, vertical_scale)?;
    let mut x = init.values;
    let free = bc.apply(mesh, m, &mut x);

    let mut g0 = vec![0.0; x.len()];
    let first_reg = opts.continuation[0];
    let e0 = energy.gradient(&x, first_reg, &mut g0);
    if !e0.is_finite() {
        return Err(Error::BlowUp);
    }
    let g0_norm = g0.iter().zip(&free).filter(|(_, f)| **f).map(|(g, _)| g * g).sum::<f64>().sqrt();
    let mut stages = Vec::new();
    let last = opts.continuation.len() - 1;
    for (k, &reg) in opts.continuation.iter().enumerate() {
        let eval = |u: &[f64], g: &mut [f64]| energy.gradient(u, reg, g);
        let precond = |u: &[f64]| {
            let d = energy.diagonal(u, reg);
            let top = d.iter().fold(0.0f64, |a, b| a.max(*b));
            d.iter().map(|v| 1.0 / v.max(1e-12 * top).max(1e-300)).collect()
        };
        let prob = lbfgs::Problem { eval: &eval, precond: &precond, free: &free };
        // intermediate stages only need a warm start
        let rel = if k == last { opts.grad_tol } else { opts.grad_tol.max(1e-5) };
        let set = lbfgs::Settings {
            grad_tol: rel * g0_norm.max(1e-300),
            max_iters: opts.max_iters,
            memory: opts.memory,
            c1: opts.c1,
            c2: opts.c2,
            precond_every: 25,
        };
        let out = lbfgs::minimize(&prob, &mut x, &set)?;
        let monotone = out.history.windows(2).all(|w| w[1] <= w[0] + lbfgs::ROUNDOFF * w[0].abs());
        stages.push(StageReport {
            reg,
            iterations: out.iterations,
            energy: out.value,
            grad_norm: out.grad_norm,
            converged: out.converged || g0_norm == 0.0,
            monotone,
        });
    }
    let last_stage = stages.last().unwrap();
    let final_energy = energy.value(&x, 0.0);
    let diag = SolveDiagnostics {
        final_energy,
        regularized_energy: last_stage.energy,
        regularization_gap: (last_stage.energy - final_energy).abs(),
        grad_norm: last_stage.grad_norm,
        initial_grad_norm: g0_norm,
        iterations: stages.iter().map(|s| s.iterations).collect(),
        monotone: stages.iter().all(|s| s.monotone),
        converged: last_stage.converged,
        stages,
    };
    Ok((Field { m, values: x }, diag))
}

/// Worst relative error between the assembled gradient and central finite
/// differences of the local patch energy at `probes` random degrees of
/// freedom.
#[allow(clippy::too_many_arguments)]
pub fn check_gradient(
    mesh: &SlitMesh,
    density: &dyn Density,
    field: &Field,
    probes: usize,
    reg: f64,
    vertical_scale: f64,
    seed: u64,
) -> Result<f64> {
    field.check(mesh)?;
    let m = field.m;
    let energy = Energy::new(mesh, density, m, vertical_scale)?;
    let mut g = vec![0.0; field.values.len()];
    energy.gradient(&field.values, reg, &mut g);
    let mut patches = vec![Vec::new(); mesh.n_nodes()];
    for e in 0..mesh.n_elements() {
        for &i in mesh.element(e) {
            patches[i].push(e);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-5;
    let mut worst = 0.0f64;
    let mut u = field.values.clone();
    for _ in 0..probes {
        let dof = rng.gen_range(0..u.len());
        let patch = &patches[dof / m];
        let local = |u: &[f64]| patch.iter().map(|&e| energy.element_energy(u, e, reg)).sum::<f64>();
        let base = u[dof];
        u[dof] = base + step;
        let fp = local(&u);
        u[dof] = base - step;
        let fm = local(&u);
        u[dof] = base;
        let fd = (fp - fm) / (2.0 * step);
        let denom = g[dof].abs().max(fd.abs()).max(1e-10);
        worst = worst.max((fd - g[dof]).abs() / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyDensity;
    use crate::mesh::{build_annulus_mesh, build_slit_mesh, CellDomainSpec};
    use std::f64::consts::PI;

    #[test]
    fn zero_data_gives_zero_field() {
        let mesh = build_slit_mesh(&CellDomainSpec::axisymmetric(3, 2.0, 1.0, 0.25, 1.0)).unwrap();
        let w = EnergyDensity::power(1, 4, 1.5).unwrap();
        let (f, d) = minimize(&mesh, &w, &BoundaryCondition::jump(&[0.0]).unwrap(), 1.0, &SolveOptions::default()).unwrap();
        assert!(f.values.iter().all(|v| *v == 0.0));
        assert_eq!(d.final_energy, 0.0);
    }

    #[test]
    fn shell_capacity_quadratic() {
        let mesh = build_annulus_mesh(3, 1.0, 2.0, 0.02, 1.15).unwrap();
        let w = EnergyDensity::power(1, 3, 2.0).unwrap();
        let bc = BoundaryCondition::new().with(BoundaryTag::Inner, vec![1.0]).unwrap().with(BoundaryTag::Outer, vec![0.0]).unwrap();
        let (f, d) = minimize(&mesh, &w, &bc, 1.0, &SolveOptions::default()).unwrap();
        assert!(d.converged && d.monotone);
        assert!((d.final_energy - 8.0 * PI).abs() / (8.0 * PI) < 0.01, "{}", d.final_energy);
        for i in mesh.nodes_with(BoundaryTag::Inner) {
            assert_eq!(f.at(i)[0], 1.0);
        }
    }

    #[test]
    fn gradient_check_quadratic_and_degenerate() {
        let mesh = build_slit_mesh(&CellDomainSpec::axisymmetric(3, 2.0, 1.0, 0.25, 1.15)).unwrap();
        let field = Field::from_fn(&mesh, 1, |i, x, _, out| out[0] = (x[0] * 1.3 + x[1]).sin() + 0.1 * (i % 3) as f64);
        let q = EnergyDensity::power(1, 4, 2.0).unwrap();
        assert!(check_gradient(&mesh, &q, &field, 50, 0.0, 1.0, 1).unwrap() < 1e-8);
        let w = EnergyDensity::power(1, 4, 1.5).unwrap();
        assert!(check_gradient(&mesh, &w, &field, 50, 1e-3, 1.0, 2).unwrap() < 1e-4);
    }

    #[test]
    fn bc_errors() {
        let bc = BoundaryCondition::new().with(BoundaryTag::TopCap, vec![1.0]).unwrap();
        assert!(bc.clone().with(BoundaryTag::TopCap, vec![0.0]).is_err());
        assert!(BoundaryCondition::new().with(BoundaryTag::TopCap, vec![f64::NAN]).is_err());
        let o = SolveOptions { continuation: vec![1e-3, 1e-2], ..SolveOptions::default() };
        assert!(o.validate().is_err());
    }
}
