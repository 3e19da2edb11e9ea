//! Interfacial energy densities from truncated cell problems.

mod capacity;
mod extrapolate;
mod scan;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use capacity::radial_capacity;
pub use extrapolate::{extrapolate, Extrapolation, TailModel};
pub use scan::{
    scan_ell_continuity, scan_lipschitz, scan_upper_bound, upper_bound_constant, EllRow, LipschitzReport, LipschitzRow, UpperBoundReport,
    UpperBoundRow,
};

use crate::energy::{shared, AmplitudeGrid, Density, EnergyDensity, EnvelopeApprox, InnerSolver, ReducedDensity};
use crate::error::{Error, Result};
use crate::mesh::{build_membrane_mesh, build_slit_mesh, BoundaryTag, CellDomainSpec, Field, MeshMode, SlitMesh};
use crate::solver::{minimize, BoundaryCondition, SolveDiagnostics, SolveOptions};

/// Which of the three cell problems to solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum CellRegime {
    Finite { ell: f64 },
    Infinite,
    Zero,
}

impl CellRegime {
    pub fn label(&self) -> &'static str {
        match self {
            CellRegime::Finite { .. } => "finite",
            CellRegime::Infinite => "infinite",
            CellRegime::Zero => "zero",
        }
    }
    /// `ℓ` as a number, infinite and zero included.
    pub fn ell(&self) -> f64 {
        match self {
            CellRegime::Finite { ell } => *ell,
            CellRegime::Infinite => f64::INFINITY,
            CellRegime::Zero => 0.0,
        }
    }
}

/// Settings of the lamination used when `ḡ` is not convex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LaminationSettings {
    pub depth: usize,
    pub direction_budget: usize,
    pub points: usize,
    pub half_width: f64,
}

impl Default for LaminationSettings {
    fn default() -> Self {
        Self { depth: 2, direction_budget: 16, points: 41, half_width: 4.0 }
    }
}

#[derive(Clone, Debug)]
pub struct CellProblemSpec {
    pub regime: CellRegime,
    pub z: Vec<f64>,
    /// Lateral dimension `n - 1`.
    pub d: usize,
    /// The limit density `g` on `m × (d + 1)` matrices.
    pub density: EnergyDensity,
    /// Increasing truncation radii.
    pub n_list: Vec<f64>,
    pub resolution: f64,
    pub grading: f64,
    pub mode: MeshMode,
    pub solver: SolveOptions,
    /// Vertical truncation of the zero regime as a multiple of `N`.
    pub height_factor: f64,
    pub lamination: LaminationSettings,
}

impl CellProblemSpec {
    pub fn new(regime: CellRegime, z: Vec<f64>, d: usize, density: EnergyDensity) -> Result<Self> {
        let spec = Self {
            regime,
            z,
            d,
            density,
            n_list: vec![2.0, 4.0, 8.0],
            resolution: 0.25,
            grading: 1.15,
            mode: MeshMode::Axisymmetric,
            solver: SolveOptions::default(),
            height_factor: 1.0,
            lamination: LaminationSettings::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_truncations(mut self, n_list: Vec<f64>) -> Result<Self> {
        self.n_list = n_list;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mesh(mut self, resolution: f64, grading: f64) -> Result<Self> {
        self.resolution = resolution;
        self.grading = grading;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mode(mut self, mode: MeshMode) -> Result<Self> {
        self.mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn with_solver(mut self, solver: SolveOptions) -> Result<Self> {
        solver.validate()?;
        self.solver = solver;
        Ok(self)
    }

    pub fn with_z(mut self, z: Vec<f64>) -> Result<Self> {
        self.z = z;
        self.validate()?;
        Ok(self)
    }

    pub fn with_regime(mut self, regime: CellRegime) -> Result<Self> {
        self.regime = regime;
        self.validate()?;
        Ok(self)
    }

    pub fn p(&self) -> f64 {
        self.density.p()
    }

    /// `p* = (n-1)p / (n-1-p)`
    pub fn p_star(&self) -> f64 {
        let d = self.d as f64;
        d * self.p() / (d - self.p())
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if !(p > 1.0 && p < self.d as f64) {
            return Err(Error::CellSpec(format!("need 1 < p < n-1, got p = {p}, n-1 = {}", self.d)));
        }
        if self.density.n() != self.d + 1 {
            return Err(Error::CellSpec(format!("density has {} columns, expected n = {}", self.density.n(), self.d + 1)));
        }
        if self.density.m() != self.z.len() || self.z.is_empty() {
            return Err(Error::CellSpec(format!("z has {} entries, density m = {}", self.z.len(), self.density.m())));
        }
        if self.z.iter().any(|v| !v.is_finite()) {
            return Err(Error::CellSpec("z must be finite".into()));
        }
        if self.n_list.is_empty() || self.n_list.iter().any(|n| !(*n > 1.0)) || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::CellSpec("truncations must exceed 1 and increase strictly".into()));
        }
        if let CellRegime::Finite { ell } = self.regime {
            if !(ell > 0.0 && ell.is_finite()) {
                return Err(Error::CellSpec(format!("finite regime needs 0 < ℓ < ∞, got {ell}")));
            }
        }
        if self.mode == MeshMode::Full && self.d != 2 {
            return Err(Error::UnsupportedDimension(format!("full mode needs d = 2, got d = {}", self.d)));
        }
        if !(self.height_factor > 0.0) {
            return Err(Error::CellSpec("height factor must be positive".into()));
        }
        Ok(())
    }

    /// The density used in the cell problems and how it was obtained.
    pub fn limit_density(&self) -> Result<(EnergyDensity, &'static str)> {
        if self.density.is_p_homogeneous() {
            return Ok((self.density.clone(), "exact"));
        }
        self.density
            .homogeneous_limit()
            .map(|g| (g, "homogeneous_part"))
            .ok_or_else(|| Error::CellSpec("no closed-form scaling limit; pass the limit density g directly".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub regime: CellRegime,
    pub z: Vec<f64>,
    pub d: usize,
    pub p: f64,
    pub p_star: f64,
    pub n_list: Vec<f64>,
    pub phi_by_n: Vec<f64>,
    pub phi_extrapolated: f64,
    pub extrapolation: Option<Extrapolation>,
    pub diagnostics: Vec<SolveDiagnostics>,
    /// Mean and max of `|ζ - z/2| / |z|` over the hole at the largest `N`.
    pub trace_mean_dev: f64,
    pub trace_max_dev: f64,
    pub converged: bool,
    /// `exact` or `homogeneous_part`.
    pub limit_density: String,
    /// How `Q ḡ` was evaluated in the infinite regime.
    pub relaxation: String,
    pub dofs: Vec<usize>,
}

/// One truncated solve with its mesh and minimizer.
pub struct TruncatedSolve {
    pub n: f64,
    pub phi: f64,
    pub diagnostics: SolveDiagnostics,
    pub mesh: SlitMesh,
    pub field: Field,
    pub trace_mean_dev: f64,
    pub trace_max_dev: f64,
    pub relaxation: String,
}

/// Radial profiles `ζ^±(s)` of a scalar membrane minimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub s: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl RadialProfile {
    /// Piecewise-linear value on side `±1`, held constant beyond the end.
    pub fn eval(&self, s: f64, side: i8) -> f64 {
        let vals = if side >= 0 { &self.upper } else { &self.lower };
        let k = self.s.partition_point(|x| *x <= s);
        if k == 0 {
            return vals[0];
        }
        if k >= self.s.len() {
            return vals[vals.len() - 1];
        }
        let (a, b) = (self.s[k - 1], self.s[k]);
        let w = (s - a) / (b - a);
        vals[k - 1] * (1.0 - w) + vals[k] * w
    }

    /// Radial derivative on side `±1`.
    pub fn slope(&self, s: f64, side: i8) -> f64 {
        let vals = if side >= 0 { &self.upper } else { &self.lower };
        let k = self.s.partition_point(|x| *x <= s);
        if k == 0 || k >= self.s.len() {
            return 0.0;
        }
        (vals[k] - vals[k - 1]) / (self.s[k] - self.s[k - 1])
    }
}

impl TruncatedSolve {
    /// Profiles of a scalar membrane solve.
    pub fn membrane_profile(&self) -> Result<RadialProfile> {
        if self.mesh.dim != 1 || self.field.m != 1 {
            return Err(Error::CellSpec("profiles exist for scalar membrane solves only".into()));
        }
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        for i in 0..self.mesh.n_nodes() {
            if self.mesh.node_side[i] >= 0 {
                let s = self.mesh.node(i)[0];
                let up = self.field.at(i)[0];
                pts.push((s, up, up));
            }
        }
        for &(u, l) in &self.mesh.slit_pairs {
            let s = self.mesh.node(u)[0];
            if let Some(e) = pts.iter_mut().find(|e| e.0 == s) {
                e.1 = self.field.at(u)[0];
                e.2 = self.field.at(l)[0];
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(RadialProfile {
            s: pts.iter().map(|e| e.0).collect(),
            upper: pts.iter().map(|e| e.1).collect(),
            lower: pts.iter().map(|e| e.2).collect(),
        })
    }
}

fn relaxed_membrane_density(g: &EnergyDensity, lam: &LaminationSettings) -> Result<(Arc<dyn Density>, String)> {
    let reduced = ReducedDensity::new(g.clone(), InnerSolver::default())?;
    let bar = shared(reduced);
    if bar.is_convex() {
        return Ok((bar, "exact (convex)".into()));
    }
    let dim = bar.rows() * bar.cols();
    let grid = AmplitudeGrid::centered(dim, lam.half_width, lam.points | 1);
    let env = EnvelopeApprox::new(bar, lam.depth, lam.direction_budget, grid)?;
    Ok((Arc::new(env), format!("lamination depth {}", lam.depth)))
}

/// Solves the cell problem of `spec` truncated at radius `n`. The mesh
/// carries nodes at every smaller entry of `spec.n_list`.
pub fn solve_truncated(spec: &CellProblemSpec, n: f64) -> Result<TruncatedSolve> {
    spec.validate()?;
    let (g, _) = spec.limit_density()?;
    let breaks: Vec<f64> = spec.n_list.iter().copied().filter(|&b| b < n).collect();
    let d = spec.d;
    let isotropic_needed = spec.mode == MeshMode::Axisymmetric || spec.regime == CellRegime::Infinite;
    if isotropic_needed && !g.lateral_isotropy(d) {
        return Err(Error::CellSpec("radial reduction needs a laterally isotropic density; use full mode (d = 2)".into()));
    }
    let bc = BoundaryCondition::jump(&spec.z)?;
    let (mesh, density, scale, bc, relaxation): (SlitMesh, Arc<dyn Density>, f64, BoundaryCondition, String) = match spec.regime {
        CellRegime::Infinite => {
            let mesh = build_membrane_mesh(d, n, spec.resolution, spec.grading, &breaks)?;
            let (bar, how) = relaxed_membrane_density(&g, &spec.lamination)?;
            (mesh, bar, 1.0, bc, how)
        }
        CellRegime::Finite { ell } => {
            let dom = CellDomainSpec { mode: spec.mode, ..CellDomainSpec::axisymmetric(d, n, 1.0, spec.resolution, spec.grading) }
                .with_breaks(breaks, Vec::new());
            (build_slit_mesh(&dom)?, Arc::new(g), ell, bc, "none".into())
        }
        CellRegime::Zero => {
            let h = spec.height_factor;
            let vbreaks = breaks.iter().map(|b| b * h).collect();
            let dom = CellDomainSpec { mode: spec.mode, ..CellDomainSpec::axisymmetric(d, n, h * n, spec.resolution, spec.grading) }
                .with_breaks(breaks, vbreaks);
            let bc = bc.with(BoundaryTag::TopCap, spec.z.clone())?.with(BoundaryTag::BottomCap, vec![0.0; spec.z.len()])?;
            (build_slit_mesh(&dom)?, Arc::new(g), 1.0, bc, "none".into())
        }
    };
    let (field, diagnostics) = minimize(&mesh, density.as_ref(), &bc, scale, &spec.solver)?;
    let (trace_mean_dev, trace_max_dev) = trace_deviation(&mesh, &field, &spec.z);
    Ok(TruncatedSolve { n, phi: diagnostics.final_energy, diagnostics, mesh, field, trace_mean_dev, trace_max_dev, relaxation })
}

fn trace_deviation(mesh: &SlitMesh, field: &Field, z: &[f64]) -> (f64, f64) {
    let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if zn == 0.0 || mesh.shared_hole_nodes.is_empty() {
        return (0.0, 0.0);
    }
    let devs: Vec<f64> = mesh
        .shared_hole_nodes
        .iter()
        .map(|&i| field.at(i).iter().zip(z).map(|(u, zi)| (u - 0.5 * zi).powi(2)).sum::<f64>().sqrt() / zn)
        .collect();
    let mean = devs.iter().sum::<f64>() / devs.len() as f64;
    (mean, devs.iter().fold(0.0, |a, b| a.max(*b)))
}

/// `φ` for every truncation in `spec.n_list`, extrapolated in `N`.
pub fn solve_phi(spec: &CellProblemSpec) -> Result<CellResult> {
    spec.validate()?;
    let (_, how_g) = spec.limit_density()?;
    let solves: Vec<TruncatedSolve> = spec.n_list.par_iter().map(|&n| solve_truncated(spec, n)).collect::<Result<_>>()?;
    let phi_by_n: Vec<f64> = solves.iter().map(|s| s.phi).collect();
    let (p, d) = (spec.p(), spec.d as f64);
    let extrapolation = if phi_by_n.len() >= 3 {
        Some(extrapolate(&spec.n_list, &phi_by_n, (d - p) / (p - 1.0), TailModel::Capacitary { p })?)
    } else {
        None
    };
    let last = solves.last().unwrap();
    Ok(CellResult {
        regime: spec.regime,
        z: spec.z.clone(),
        d: spec.d,
        p,
        p_star: spec.p_star(),
        n_list: spec.n_list.clone(),
        phi_extrapolated: extrapolation.as_ref().map_or(*phi_by_n.last().unwrap(), |e| e.limit),
        phi_by_n,
        extrapolation,
        trace_mean_dev: last.trace_mean_dev,
        trace_max_dev: last.trace_max_dev,
        converged: solves.iter().all(|s| s.diagnostics.converged),
        limit_density: how_g.into(),
        relaxation: last.relaxation.clone(),
        dofs: solves.iter().map(|s| s.field.values.len()).collect(),
        diagnostics: solves.into_iter().map(|s| s.diagnostics).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scalar(regime: CellRegime, z: f64) -> CellProblemSpec {
        CellProblemSpec::new(regime, vec![z], 3, EnergyDensity::power(1, 4, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn zero_jump_costs_nothing() {
        for regime in [CellRegime::Infinite, CellRegime::Finite { ell: 1.0 }, CellRegime::Zero] {
            let r = solve_phi(&scalar(regime, 0.0).with_mesh(0.25, 1.0).unwrap()).unwrap();
            assert!(r.phi_by_n.iter().all(|v| *v == 0.0));
            assert_eq!(r.phi_extrapolated, 0.0);
        }
    }

    #[test]
    fn membrane_value_matches_capacity_oracle() {
        let spec = scalar(CellRegime::Infinite, 1.0).with_truncations(vec![4.0, 8.0, 16.0, 32.0]).unwrap();
        let r = solve_phi(&spec).unwrap();
        assert!(r.converged);
        assert!((r.phi_extrapolated - 2.0 * PI).abs() / (2.0 * PI) < 0.03, "{}", r.phi_extrapolated);
        assert!(r.phi_by_n.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.trace_mean_dev < 0.01);
    }

    #[test]
    fn rejects_supercritical_exponent() {
        let w = EnergyDensity::power(1, 3, 2.0).unwrap();
        let e = CellProblemSpec::new(CellRegime::Infinite, vec![1.0], 2, w).unwrap_err();
        assert!(e.to_string().contains("1 < p < n-1"));
    }

    #[test]
    fn profile_interpolates() {
        let prof = RadialProfile { s: vec![0.0, 1.0, 2.0], upper: vec![0.5, 0.5, 1.0], lower: vec![0.5, 0.5, 0.0] };
        assert_eq!(prof.eval(1.5, 1), 0.75);
        assert_eq!(prof.eval(1.5, -1), 0.25);
        assert_eq!(prof.eval(5.0, 1), 1.0);
        assert_eq!(prof.slope(1.5, -1), -0.5);
    }
}
