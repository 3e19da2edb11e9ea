//! Declarative experiment configuration (TOML).

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cell::{CellProblemSpec, CellRegime, LaminationSettings};
use crate::energy::EnergyDensity;
use crate::error::{Error, Result};
use crate::mesh::MeshMode;
use crate::regime::{FilmSpec, Profile, RegimeSequences, Shape, TrendOptions};
use crate::solver::SolveOptions;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Capacity,
    Cell,
    Relax,
    Regime,
    Film,
    Trend,
    Poincare,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Capacity => "capacity",
            Command::Cell => "cell",
            Command::Relax => "relax",
            Command::Regime => "regime",
            Command::Film => "film",
            Command::Trend => "trend",
            Command::Poincare => "poincare",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Power,
    Anisotropic,
    Shifted,
    DoubleWell,
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub kind: DensityKind,
    pub p: f64,
    #[serde(default = "one_usize")]
    pub m: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Row-major matrix data: `M` (n × k) for anisotropic, `A` (m × n) for
    /// shifted and double-well densities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reg_eps: Option<f64>,
}

impl DensityConfig {
    fn matrix(&self) -> Result<DMatrix<f64>> {
        let rows = self.matrix.as_ref().ok_or_else(|| Error::Config(format!("density kind {:?} needs `matrix`", self.kind)))?;
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.is_empty() || cols == 0 || rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Config("`matrix` must be a non-empty rectangular array of rows".into()));
        }
        Ok(DMatrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
    }

    pub fn build(&self) -> Result<EnergyDensity> {
        let mut w = match self.kind {
            DensityKind::Power => EnergyDensity::power(self.m, self.n, self.p)?,
            DensityKind::Anisotropic => EnergyDensity::anisotropic(self.m, self.n, self.p, &self.matrix()?)?,
            DensityKind::Shifted => EnergyDensity::shifted(self.p, &self.matrix()?)?,
            DensityKind::DoubleWell => EnergyDensity::double_well(self.p, &self.matrix()?)?,
        };
        if w.m() != self.m || w.n() != self.n {
            return Err(Error::Config(format!("matrix gives a {}×{} density, config says {}×{}", w.m(), w.n(), self.m, self.n)));
        }
        if let Some(b) = self.beta {
            w = w.with_beta(b)?;
        }
        if let Some(e) = self.reg_eps {
            w = w.with_reg_eps(e)?;
        }
        Ok(w)
    }
}

fn default_resolution() -> f64 {
    0.25
}
fn default_grading() -> f64 {
    1.15
}
fn default_mode() -> MeshMode {
    MeshMode::Axisymmetric
}
fn default_height() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    /// Lateral dimension `n - 1`.
    pub d: usize,
    pub n_list: Vec<f64>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_mode")]
    pub mode: MeshMode,
    #[serde(default = "default_height")]
    pub height_factor: f64,
}

/// `ell = 0` selects the zero regime and `ell = inf` the membrane one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub ell: f64,
    pub z: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ell: Vec<f64>,
    pub z: Vec<Vec<f64>>,
}

pub fn regime_of(ell: f64) -> Result<CellRegime> {
    if ell == 0.0 {
        Ok(CellRegime::Zero)
    } else if ell == f64::INFINITY {
        Ok(CellRegime::Infinite)
    } else if ell > 0.0 && ell.is_finite() {
        Ok(CellRegime::Finite { ell })
    } else {
        Err(Error::Config(format!("ell must be 0, positive or inf, got {ell}")))
    }
}

fn unit_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityConfig {
    pub d: usize,
    pub p: f64,
    #[serde(default = "unit_radius")]
    pub r_in: f64,
    pub r_out: Vec<f64>,
}

fn growth_samples() -> usize {
    256
}
fn growth_radius() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxConfig {
    /// Column-major `m × (n-1)` matrices where `W̄` is evaluated.
    #[serde(default)]
    pub wbar: Vec<Vec<f64>>,
    /// Column-major `m × n` matrices where `g` is evaluated.
    #[serde(default)]
    pub g_limit: Vec<Vec<f64>>,
    /// Decreasing scales `r` for `g`; defaults to `1, 1e-1, 1e-2, 1e-3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_schedule: Option<Vec<f64>>,
    #[serde(default = "growth_samples")]
    pub growth_samples: usize,
    #[serde(default = "growth_radius")]
    pub growth_radius: f64,
    #[serde(default)]
    pub lamination: LaminationSettings,
}

fn unit_x() -> [f64; 2] {
    [1.0, 0.0]
}
fn film_budget() -> usize {
    8_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmConfig {
    pub omega: [f64; 4],
    pub eps: f64,
    pub delta: f64,
    pub r: f64,
    pub h: f64,
    /// In-plane gradient of the layer-wise affine test field.
    #[serde(default = "unit_x")]
    pub gradient: [f64; 2],
    /// Constant added on the upper and lower layer.
    #[serde(default)]
    pub offset: [f64; 2],
    #[serde(default = "film_budget")]
    pub max_voxels: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrendConfig {
    pub j: Vec<usize>,
    pub u_plus: f64,
    pub u_minus: f64,
    #[serde(default)]
    pub options: TrendOptions,
}

fn default_profiles() -> Vec<Profile> {
    vec![Profile::Linear, Profile::Mixed]
}
fn default_order() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareConfig {
    pub shape: Shape,
    pub p: f64,
    pub rho: Vec<f64>,
    pub delta: Vec<f64>,
    #[serde(default = "default_profiles")]
    pub profiles: Vec<Profile>,
    #[serde(default = "default_order")]
    pub order: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

fn default_dir() -> String {
    "out".into()
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_dir(), formats: default_formats() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolveOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell: Option<CellConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<CapacityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax: Option<RelaxConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<RegimeSequences>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub film: Option<FilmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<TrendConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poincare: Option<PoincareConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn need<'a, T>(block: &'a Option<T>, name: &str, cmd: Command) -> Result<&'a T> {
    block.as_ref().ok_or_else(|| Error::Config(format!("command `{}` needs a [{name}] block", cmd.name())))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn solver(&self) -> SolveOptions {
        self.solver.clone().unwrap_or_default()
    }

    /// The cell problem for one `(ℓ, z)` point.
    pub fn cell_spec(&self, ell: f64, z: &[f64]) -> Result<CellProblemSpec> {
        let cmd = self.command;
        let g = need(&self.geometry, "geometry", cmd)?;
        let w = need(&self.density, "density", cmd)?.build()?;
        let mut spec = CellProblemSpec::new(regime_of(ell)?, z.to_vec(), g.d, w)?
            .with_truncations(g.n_list.clone())?
            .with_mesh(g.resolution, g.grading)?
            .with_mode(g.mode)?
            .with_solver(self.solver())?;
        spec.height_factor = g.height_factor;
        spec.validate()?;
        Ok(spec)
    }

    pub fn film_spec(&self) -> Result<FilmSpec> {
        let f = need(&self.film, "film", self.command)?;
        FilmSpec::new(f.omega, f.eps, f.delta, f.r, f.h)
    }

    /// Every physical constraint the command depends on.
    pub fn validate(&self) -> Result<()> {
        let cmd = self.command;
        if let Some(s) = &self.solver {
            s.validate()?;
        }
        match cmd {
            Command::Capacity => {
                let c = need(&self.capacity, "capacity", cmd)?;
                if c.r_out.is_empty() {
                    return Err(Error::Config("capacity needs at least one r_out".into()));
                }
                if !(c.p > 1.0 && c.p < c.d as f64) {
                    return Err(Error::Config(format!("capacity needs 1 < p < d, got p = {}, d = {}", c.p, c.d)));
                }
            }
            Command::Cell => {
                let c = need(&self.cell, "cell", cmd)?;
                self.cell_spec(c.ell, &c.z)?;
            }
            Command::Sweep => {
                let s = need(&self.sweep, "sweep", cmd)?;
                if s.ell.is_empty() || s.z.is_empty() {
                    return Err(Error::Config("sweep needs at least one ell and one z".into()));
                }
                for &ell in &s.ell {
                    for z in &s.z {
                        self.cell_spec(ell, z)?;
                    }
                }
            }
            Command::Relax => {
                let r = need(&self.relax, "relax", cmd)?;
                let w = need(&self.density, "density", cmd)?.build()?;
                if self.seed.is_none() && r.growth_samples > 0 {
                    return Err(Error::Config("relax samples densities at random; declare `seed`".into()));
                }
                let (m, n) = (w.m(), w.n());
                if r.wbar.iter().any(|f| f.len() != m * (n - 1)) || r.g_limit.iter().any(|f| f.len() != m * n) {
                    return Err(Error::Config(format!("relax points need {} (wbar) or {} (g_limit) entries", m * (n - 1), m * n)));
                }
            }
            Command::Regime => {
                need(&self.regime, "regime", cmd)?;
            }
            Command::Film => {
                self.film_spec()?;
                let w = need(&self.density, "density", cmd)?.build()?;
                if w.n() != 3 || w.m() != 1 {
                    return Err(Error::Config("film energies use scalar densities with n = 3".into()));
                }
            }
            Command::Trend => {
                let t = need(&self.trend, "trend", cmd)?;
                let s = need(&self.regime, "regime", cmd)?;
                let w = need(&self.density, "density", cmd)?.build()?;
                if s.n != 3 || w.n() != 3 || w.m() != 1 {
                    return Err(Error::Config("the trend runs scalar films with n = 3".into()));
                }
                if !(w.p() > 1.0 && w.p() < 2.0) {
                    return Err(Error::Config(format!("need 1 < p < n-1, got p = {}", w.p())));
                }
                if t.j.len() < 3 || t.j.contains(&0) {
                    return Err(Error::Config("trend needs at least three indices j >= 1".into()));
                }
            }
            Command::Poincare => {
                let q = need(&self.poincare, "poincare", cmd)?;
                if q.rho.is_empty() || q.delta.is_empty() || q.profiles.is_empty() {
                    return Err(Error::Config("poincare needs scales and profiles".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CELL: &str = r#"
command = "cell"

[density]
kind = "power"
p = 1.5
n = 4

[geometry]
d = 3
n_list = [2.0, 4.0, 8.0]

[cell]
ell = inf
z = [1.0]
"#;

    #[test]
    fn parse_and_round_trip() {
        let cfg = ExperimentConfig::parse(CELL).unwrap();
        assert_eq!(cfg.cell.as_ref().unwrap().ell, f64::INFINITY);
        let again = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), cfg.to_toml());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = CELL.replace("n = 4", "n = 4\ncolour = 3");
        assert!(matches!(ExperimentConfig::parse(&text), Err(Error::Config(_))));
    }

    #[test]
    fn exponent_range_is_checked() {
        let text = CELL.replace("p = 1.5", "p = 3.0");
        let err = ExperimentConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("1 < p < n-1"), "{err}");
    }

    #[test]
    fn missing_block_names_it() {
        let err = ExperimentConfig::parse("command = \"film\"").unwrap_err();
        assert!(err.to_string().contains("[film]"));
    }

    #[test]
    fn relax_needs_a_seed() {
        let text = "command = \"relax\"\n[density]\nkind = \"power\"\np = 2.0\nn = 3\n[relax]\n";
        assert!(ExperimentConfig::parse(text).is_err());
        assert!(ExperimentConfig::parse(&format!("seed = 1\n{text}")).is_ok());
    }
}
