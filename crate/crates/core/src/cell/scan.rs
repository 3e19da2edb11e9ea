use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{radial_capacity, solve_phi, solve_truncated, CellProblemSpec, CellRegime, CellResult};
use crate::error::{Error, Result};

/// `K` such that `φ(z) <= β K |z|^p`.
///
/// For `ℓ ∈ (0, ∞]` the layer-independent test field built from the
/// capacitary potential of the unit disk gives `2^{1-p} Cap_p(B_1; R^d)`.
/// For `ℓ = 0` the potential of the unit ball of `R^{d+1}` gives
/// `2^{-p} Cap_p(B_1; R^{d+1})`.
pub fn upper_bound_constant(regime: CellRegime, d: usize, p: f64) -> Result<f64> {
    match regime {
        CellRegime::Zero => Ok(2f64.powf(-p) * radial_capacity(d + 1, p, 1.0, f64::INFINITY)?),
        _ => Ok(2f64.powf(1.0 - p) * radial_capacity(d, p, 1.0, f64::INFINITY)?),
    }
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn solve_all(spec: &CellProblemSpec, zs: &[Vec<f64>]) -> Result<Vec<CellResult>> {
    zs.par_iter().map(|z| solve_phi(&spec.clone().with_z(z.clone())?)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundRow {
    pub z_norm: f64,
    pub phi: f64,
    pub bound: f64,
    /// Twice the estimated discretization plus extrapolation error.
    pub margin: f64,
    /// `|φ_h - φ_{h/2}|` scaled to this `z`.
    pub mesh_error: f64,
    /// `φ / (K |z|^p)`
    pub ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundReport {
    pub regime: CellRegime,
    pub reference: f64,
    pub beta: f64,
    pub rows: Vec<UpperBoundRow>,
    /// `max φ(z) / |z|^p` over nonzero samples.
    pub empirical_c: f64,
    pub passed: bool,
}

fn extrapolation_error(r: &CellResult) -> f64 {
    r.extrapolation.as_ref().map_or(0.0, |e| e.free_limit.map_or(0.0, |f| (f - e.limit).abs()) + e.residual * e.limit.abs())
}

/// Checks `φ(z) <= β K |z|^p + margin` at every sample.
///
/// The cell density is p-homogeneous, so the discrete `φ_h` is too, and
/// the mesh error is measured once per direction `z/|z|` by re-solving at
/// half the element size.
pub fn scan_upper_bound(spec: &CellProblemSpec, zs: &[Vec<f64>]) -> Result<UpperBoundReport> {
    let p = spec.p();
    let k = upper_bound_constant(spec.regime, spec.d, p)?;
    let beta = spec.density.beta();
    let results = solve_all(spec, zs)?;

    let mut directions: Vec<Vec<f64>> = Vec::new();
    for z in zs {
        let n = norm(z);
        if n > 0.0 {
            let u: Vec<f64> = z.iter().map(|v| v / n).collect();
            if !directions.contains(&u) {
                directions.push(u);
            }
        }
    }
    let fine = spec.clone().with_mesh(spec.resolution / 2.0, spec.grading)?;
    let coarse_unit = solve_all(spec, &directions)?;
    let fine_unit = solve_all(&fine, &directions)?;
    let unit_error: Vec<f64> = coarse_unit.iter().zip(&fine_unit).map(|(a, b)| (a.phi_extrapolated - b.phi_extrapolated).abs()).collect();

    let mut rows = Vec::with_capacity(zs.len());
    let mut c = 0.0f64;
    for r in &results {
        let zn = norm(&r.z);
        let phi = r.phi_extrapolated;
        let mesh_error = if zn > 0.0 {
            let u: Vec<f64> = r.z.iter().map(|v| v / zn).collect();
            unit_error[directions.iter().position(|d| *d == u).unwrap()] * zn.powf(p)
        } else {
            0.0
        };
        let margin = 2.0 * (mesh_error + extrapolation_error(r));
        let bound = beta * k * zn.powf(p);
        if zn > 0.0 {
            c = c.max(phi / zn.powf(p));
        }
        rows.push(UpperBoundRow {
            z_norm: zn,
            phi,
            bound,
            margin,
            mesh_error,
            ratio: if zn > 0.0 { phi / (k * zn.powf(p)) } else { 0.0 },
            pass: phi <= bound + margin,
        });
    }
    Ok(UpperBoundReport { regime: spec.regime, reference: k, beta, passed: rows.iter().all(|r| r.pass), rows, empirical_c: c })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub phi_z: f64,
    pub phi_w: f64,
    /// `|φ(z) - φ(w)| / (|z - w| (|z|^{p-1} + |w|^{p-1}))`
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub regime: CellRegime,
    pub rows: Vec<LipschitzRow>,
    pub worst: f64,
    pub finite: bool,
    /// Pairs with `z = w`.
    pub skipped: usize,
}

pub fn scan_lipschitz(spec: &CellProblemSpec, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<LipschitzReport> {
    let p = spec.p();
    let kept: Vec<&(Vec<f64>, Vec<f64>)> = pairs.iter().filter(|(z, w)| z != w).collect();
    let skipped = pairs.len() - kept.len();
    let mut unique: Vec<Vec<f64>> = Vec::new();
    for (z, w) in &kept {
        for v in [z, w] {
            if !unique.contains(v) {
                unique.push(v.clone());
            }
        }
    }
    let results = solve_all(spec, &unique)?;
    let phi_of = |v: &Vec<f64>| results[unique.iter().position(|u| u == v).unwrap()].phi_extrapolated;
    let rows: Vec<LipschitzRow> = kept
        .iter()
        .map(|(z, w)| {
            let (fz, fw) = (phi_of(z), phi_of(w));
            let diff: Vec<f64> = z.iter().zip(w.iter()).map(|(a, b)| a - b).collect();
            let weight = norm(&diff) * (norm(z).powf(p - 1.0) + norm(w).powf(p - 1.0));
            LipschitzRow { z: z.clone(), w: w.clone(), phi_z: fz, phi_w: fw, ratio: (fz - fw).abs() / weight }
        })
        .collect();
    let worst = rows.iter().fold(0.0f64, |a, r| a.max(r.ratio));
    Ok(LipschitzReport { regime: spec.regime, finite: worst.is_finite(), worst, rows, skipped })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllRow {
    pub regime: CellRegime,
    pub ell: f64,
    pub phi: f64,
    /// `|φ^(ℓ) - φ^(∞)| / φ^(∞)` on the same radial mesh.
    pub gap: f64,
}

/// `φ^(ℓ)(z)` at truncation `n` for each entry of `ells`, compared with the
/// membrane value on the same radial nodes.
pub fn scan_ell_continuity(spec: &CellProblemSpec, ells: &[CellRegime], n: f64) -> Result<Vec<EllRow>> {
    if ells.contains(&CellRegime::Zero) {
        return Err(Error::MismatchedMeshes("the zero regime lives on a different domain".into()));
    }
    let breaks: Vec<f64> = spec.n_list.iter().copied().filter(|&b| b < n).chain([n]).collect();
    let base = spec.clone().with_truncations(breaks)?;
    let reference = solve_truncated(&base.clone().with_regime(CellRegime::Infinite)?, n)?;
    let radii = |m: &crate::mesh::SlitMesh| {
        let mut s: Vec<f64> = (0..m.n_nodes()).map(|i| m.node(i)[0]).collect();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s
    };
    let ref_radii = radii(&reference.mesh);
    let solves: Vec<(CellRegime, f64)> = ells
        .par_iter()
        .map(|&regime| {
            if regime == CellRegime::Infinite {
                return Ok((regime, reference.phi));
            }
            let s = solve_truncated(&base.clone().with_regime(regime)?, n)?;
            if radii(&s.mesh) != ref_radii {
                return Err(Error::MismatchedMeshes(format!("radial nodes differ for {regime:?}")));
            }
            Ok((regime, s.phi))
        })
        .collect::<Result<_>>()?;
    Ok(solves
        .into_iter()
        .map(|(regime, phi)| EllRow {
            regime,
            ell: regime.ell(),
            phi,
            gap: if reference.phi > 0.0 { (phi - reference.phi).abs() / reference.phi } else { 0.0 },
        })
        .collect())
}
