use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify, LimitValue, RegimeLabel, RegimeSequences};
use crate::cell::{radial_capacity, solve_truncated, CellProblemSpec, CellRegime, RadialProfile};
use crate::energy::{Density, EnergyDensity, Form, KindLabel};
use crate::error::{Error, Result};
use crate::mesh::{build_voxel_slit, graded_axis, integrate_energy, Field, SlitMesh};

/// One film geometry: two layers of thickness `delta` over the rectangle
/// `omega = [x0, x1, y0, y1]`, glued through holes of radius `r` centred on
/// the lattice `eps Z²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilmSpec {
    pub omega: [f64; 4],
    pub eps: f64,
    pub delta: f64,
    pub r: f64,
    /// Lateral voxel size (the coarse size for a graded cell).
    pub h: f64,
}

impl FilmSpec {
    pub fn new(omega: [f64; 4], eps: f64, delta: f64, r: f64, h: f64) -> Result<Self> {
        let s = Self { omega, eps, delta, r, h };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let [x0, x1, y0, y1] = self.omega;
        let bad = |m: String| Err(Error::FilmGeometry(m));
        if !(x1 > x0 && y1 > y0) || self.omega.iter().any(|v| !v.is_finite()) {
            return bad("omega must be a non-empty rectangle".into());
        }
        if ![self.eps, self.delta, self.r, self.h].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return bad("eps, delta, r and h must be positive".into());
        }
        if self.r >= 0.5 * self.eps {
            return bad(format!("holes overlap: r = {} must be below eps/2 = {}", self.r, 0.5 * self.eps));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        let [x0, x1, y0, y1] = self.omega;
        (x1 - x0) * (y1 - y0)
    }

    fn cells_per_side(&self) -> Result<(f64, f64)> {
        let [x0, x1, y0, y1] = self.omega;
        let (a, b) = ((x1 - x0) / self.eps, (y1 - y0) / self.eps);
        for v in [a, b] {
            if (v - v.round()).abs() > 1e-9 * v.max(1.0) || v.round() < 1.0 {
                return Err(Error::FilmGeometry(format!("omega sides must be multiples of eps = {}", self.eps)));
            }
        }
        Ok((a.round(), b.round()))
    }
}

/// A voxelized film, or one periodic cell of it standing for `copies`
/// identical cells.
#[derive(Clone, Debug)]
pub struct FilmCell {
    pub spec: FilmSpec,
    pub mesh: SlitMesh,
    pub copies: f64,
    pub voxels: usize,
}

fn layer_axis(delta: f64, per_layer: usize) -> Vec<f64> {
    (0..=2 * per_layer).map(|k| delta * (k as f64 / per_layer as f64 - 1.0)).collect()
}

fn uniform(a: f64, b: f64, h: f64) -> Vec<f64> {
    let k = (((b - a) / h) - 1e-9).ceil().max(1.0) as usize;
    (0..=k).map(|i| a + (b - a) * i as f64 / k as f64).collect()
}

fn voxel_count(x: &[f64], y: &[f64], t: &[f64]) -> usize {
    (x.len() - 1) * (y.len() - 1) * (t.len() - 1)
}

/// Uniform voxelization of the whole film.
pub fn build_film(spec: &FilmSpec, max_voxels: usize) -> Result<FilmCell> {
    spec.validate()?;
    if spec.h > 0.5 * spec.r {
        return Err(Error::FilmGeometry(format!("holes unresolved: h = {} exceeds r/2 = {}", spec.h, 0.5 * spec.r)));
    }
    let [x0, x1, y0, y1] = spec.omega;
    let x = uniform(x0, x1, spec.h);
    let y = uniform(y0, y1, spec.h);
    let per_layer = ((spec.delta / spec.h) - 1e-9).ceil().max(2.0) as usize;
    let t = layer_axis(spec.delta, per_layer);
    let voxels = voxel_count(&x, &y, &t);
    if voxels > max_voxels {
        return Err(Error::FilmGeometry(format!("{voxels} voxels exceed the budget of {max_voxels}")));
    }
    let (eps, r) = (spec.eps, spec.r);
    let in_hole = |a: f64, b: f64| {
        let (da, db) = (a - eps * (a / eps).round(), b - eps * (b / eps).round());
        da.hypot(db) < r * (1.0 - 1e-12)
    };
    let mesh = build_voxel_slit(&x, &y, &t, &in_hole, 0.5 * (x1 - x0).max(y1 - y0), spec.delta);
    Ok(FilmCell { spec: *spec, mesh, copies: 1.0, voxels })
}

/// One hole cell `(-eps/2, eps/2)²` with lateral nodes graded towards the
/// hole edge, from `r / hole_cells` up to `spec.h`.
pub fn build_film_cell(spec: &FilmSpec, hole_cells: usize, grading: f64, per_layer: usize) -> Result<FilmCell> {
    spec.validate()?;
    let (a, b) = spec.cells_per_side()?;
    if hole_cells < 4 || per_layer < 2 {
        return Err(Error::FilmGeometry("need at least 4 cells across r and 2 voxels per layer".into()));
    }
    let half = graded_axis(&[0.0, spec.r, 0.5 * spec.eps], spec.r, spec.h, grading, spec.r / hole_cells as f64);
    let mut x: Vec<f64> = half.iter().skip(1).rev().map(|v| -v).collect();
    x.extend(&half);
    let t = layer_axis(spec.delta, per_layer);
    let r = spec.r;
    let in_hole = |a: f64, b: f64| a.hypot(b) < r * (1.0 - 1e-12);
    let mesh = build_voxel_slit(&x, &x, &t, &in_hole, 0.5 * spec.eps, spec.delta);
    let voxels = voxel_count(&x, &x, &t);
    Ok(FilmCell { spec: *spec, mesh, copies: a * b, voxels })
}

/// `(1/δ) ∫ W(Du)` over both layers.
pub fn direct_film_energy(film: &FilmCell, density: &dyn Density, field: &Field) -> Result<f64> {
    if density.cols() != 3 {
        return Err(Error::FilmGeometry("direct film energies need n = 3".into()));
    }
    Ok(film.copies * integrate_energy(&film.mesh, density, field, 1.0)? / film.spec.delta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrendOptions {
    pub omega: [f64; 4],
    /// Coarse lateral voxel size as a fraction of `eps`.
    pub coarse_fraction: f64,
    pub hole_cells: usize,
    pub grading: f64,
    pub per_layer: usize,
    pub max_voxels: usize,
    /// Membrane profile mesh: size `max(resolution, N / max_membrane_cells)`.
    pub membrane_resolution: f64,
    pub max_membrane_cells: f64,
}

impl Default for TrendOptions {
    fn default() -> Self {
        Self {
            omega: [0.0, 1.0, 0.0, 1.0],
            coarse_fraction: 1.0 / 16.0,
            hole_cells: 64,
            grading: 1.15,
            per_layer: 2,
            max_voxels: 8_000_000,
            membrane_resolution: 0.25,
            max_membrane_cells: 1024.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub j: usize,
    pub eps: f64,
    pub delta: f64,
    pub r: f64,
    /// Cell truncation `eps / (2 r)` in hole radii.
    pub n_cell: f64,
    pub voxels: usize,
    pub membrane_resolution: f64,
    pub film: f64,
    pub limit: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub label: RegimeLabel,
    pub coefficient: LimitValue,
    pub phi: f64,
    pub rows: Vec<TrendRow>,
    /// Schedule entries dropped for exceeding the voxel budget.
    pub skipped: Vec<usize>,
    pub monotone: bool,
    pub passed: bool,
}

/// Interfacial density of the membrane problem, analytic for `c|F|^p`.
fn membrane_phi(g: &EnergyDensity, z: f64) -> Result<f64> {
    if z == 0.0 {
        return Ok(0.0);
    }
    if let (KindLabel::Power, [t]) = (g.label(), g.terms()) {
        if t.form == Form::Plain && g.m() == 1 {
            let cap = radial_capacity(2, t.exponent, 1.0, f64::INFINITY)?;
            return Ok(2.0 * t.coefficient * cap * (0.5 * z.abs()).powf(t.exponent));
        }
    }
    let spec = CellProblemSpec::new(CellRegime::Infinite, vec![z], 2, g.clone())?.with_truncations(vec![8.0, 16.0, 32.0, 64.0])?;
    Ok(crate::cell::solve_phi(&spec)?.phi_extrapolated)
}

fn membrane_profile(g: &EnergyDensity, z: f64, n_cell: f64, opts: &TrendOptions) -> Result<(RadialProfile, f64)> {
    let h = opts.membrane_resolution.max(n_cell / opts.max_membrane_cells);
    let spec = CellProblemSpec::new(CellRegime::Infinite, vec![z], 2, g.clone())?.with_truncations(vec![n_cell])?.with_mesh(h, 1.15)?;
    Ok((solve_truncated(&spec, n_cell)?.membrane_profile()?, h))
}

/// Recovery-style fields `u⁻ + ζ^±(|x|/r)` for one schedule entry, compared
/// with the limit energy `R φ^(∞)(u⁺ - u⁻) |ω|`.
pub fn gamma_trend(
    schedule: &RegimeSequences,
    js: &[usize],
    target: (f64, f64),
    density: &EnergyDensity,
    opts: &TrendOptions,
) -> Result<TrendReport> {
    if schedule.n != 3 || density.n() != 3 || density.m() != 1 {
        return Err(Error::FilmGeometry("the trend experiment runs scalar films with n = 3".into()));
    }
    if (density.p() - schedule.p).abs() > 1e-12 {
        return Err(Error::Sequences(format!("schedule p = {} differs from the density exponent {}", schedule.p, density.p())));
    }
    let report = classify(schedule)?;
    if !matches!(report.label, RegimeLabel::Infinite | RegimeLabel::TrivialDecoupled) {
        return Err(Error::Sequences(format!(
            "recovery fields are built from membrane profiles; the {:?} regime is not supported",
            report.label
        )));
    }
    if js.len() < 3 {
        return Err(Error::Sequences("the trend needs at least three schedule entries".into()));
    }
    let (u_plus, u_minus) = target;
    let z = u_plus - u_minus;
    let phi = membrane_phi(density, z)?;
    let rows: Vec<Option<TrendRow>> = js
        .par_iter()
        .map(|&j| -> Result<Option<TrendRow>> {
            let (eps, delta, r) = (schedule.eps.value(j), schedule.delta.value(j), schedule.r.value(j));
            let spec = FilmSpec::new(opts.omega, eps, delta, r, opts.coarse_fraction * eps)?;
            let film = build_film_cell(&spec, opts.hole_cells, opts.grading, opts.per_layer)?;
            if film.voxels > opts.max_voxels {
                log::warn!("j = {j}: {} voxels exceed the budget {}; dropping", film.voxels, opts.max_voxels);
                return Ok(None);
            }
            let n_cell = 0.5 * eps / r;
            let (field, mres) = if z == 0.0 {
                (Field::from_fn(&film.mesh, 1, |_, _, _, o| o[0] = u_minus), 0.0)
            } else {
                let (prof, mres) = membrane_profile(density, z, n_cell, opts)?;
                let f = Field::from_fn(&film.mesh, 1, |_, x, side, o| o[0] = u_minus + prof.eval(x[0].hypot(x[1]) / r, side));
                (f, mres)
            };
            let film_energy = direct_film_energy(&film, density, &field)?;
            let coef = r.powf(2.0 - schedule.p) / (eps * eps);
            let limit = coef * phi * spec.area();
            let gap = if limit == 0.0 { film_energy.abs() } else { (film_energy - limit).abs() / limit };
            Ok(Some(TrendRow { j, eps, delta, r, n_cell, voxels: film.voxels, membrane_resolution: mres, film: film_energy, limit, gap }))
        })
        .collect::<Result<_>>()?;
    let skipped: Vec<usize> = js.iter().zip(&rows).filter(|(_, r)| r.is_none()).map(|(j, _)| *j).collect();
    let rows: Vec<TrendRow> = rows.into_iter().flatten().collect();
    let tail = &rows[rows.len().saturating_sub(3)..];
    let (monotone, passed) = if z == 0.0 {
        let ok = rows.iter().all(|r| r.film == 0.0);
        (ok, ok)
    } else if report.label == RegimeLabel::Infinite {
        let mono = tail.len() == 3 && tail.windows(2).all(|w| w[1].gap <= w[0].gap);
        (mono, mono && tail.last().is_some_and(|r| r.gap < 0.15))
    } else {
        let mono = tail.len() == 3 && tail.windows(2).all(|w| w[1].film < w[0].film);
        (mono, mono && tail.last().is_some_and(|r| r.film < 0.5 * rows[0].film))
    };
    Ok(TrendReport { label: report.label, coefficient: report.coefficient(), phi, rows, skipped, monotone, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regime::Sequence;

    fn power() -> EnergyDensity {
        EnergyDensity::power(1, 3, 1.5).unwrap()
    }

    #[test]
    fn affine_field_closed_form() {
        let spec = FilmSpec::new([0.0, 1.0, 0.0, 1.0], 0.25, 0.05, 0.05, 0.025).unwrap();
        let film = build_film(&spec, 2_000_000).unwrap();
        let u = Field::from_fn(&film.mesh, 1, |_, x, _, o| o[0] = x[0]);
        let e = direct_film_energy(&film, &power(), &u).unwrap();
        assert!((e - 2.0).abs() < 1e-10, "{e}");
        let e2 = direct_film_energy(&film, &power(), &u.scaled(3.0)).unwrap();
        assert!((e2 - 3f64.powf(1.5) * e).abs() < 1e-9);
        assert_eq!(direct_film_energy(&film, &power(), &u.scaled(0.0)).unwrap(), 0.0);
    }

    #[test]
    fn whole_film_has_lattice_holes() {
        let spec = FilmSpec::new([0.0, 1.0, 0.0, 1.0], 0.5, 0.1, 0.1, 0.05).unwrap();
        let film = build_film(&spec, 1_000_000).unwrap();
        for &i in &film.mesh.shared_hole_nodes {
            let x = film.mesh.node(i);
            let (a, b) = (x[0] - 0.5 * (2.0 * x[0]).round(), x[1] - 0.5 * (2.0 * x[1]).round());
            assert!(a.hypot(b) < 0.1);
        }
        assert!(!film.mesh.shared_hole_nodes.is_empty());
    }

    #[test]
    fn geometry_errors() {
        assert!(matches!(FilmSpec::new([0.0, 1.0, 0.0, 1.0], 0.2, 0.01, 0.1, 0.01), Err(Error::FilmGeometry(_))));
        let spec = FilmSpec::new([0.0, 1.0, 0.0, 1.0], 0.3, 0.01, 0.1, 0.01).unwrap();
        assert!(build_film_cell(&spec, 64, 1.15, 2).is_err());
        let spec = FilmSpec::new([0.0, 1.0, 0.0, 1.0], 0.25, 0.01, 0.01, 0.01).unwrap();
        assert!(build_film(&spec, 1 << 30).is_err());
    }

    #[test]
    fn cell_periodicity_matches_whole_film() {
        let spec = FilmSpec::new([0.0, 1.0, 0.0, 1.0], 0.5, 0.05, 0.1, 0.025).unwrap();
        let film = build_film_cell(&spec, 8, 1.0, 2).unwrap();
        assert_eq!(film.copies, 4.0);
        let u = Field::from_fn(&film.mesh, 1, |_, x, _, o| o[0] = 2.0 * x[1]);
        let e = direct_film_energy(&film, &power(), &u).unwrap();
        assert!((e - 2.0 * 2f64.powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn zero_jump_trend() {
        let s = RegimeSequences {
            eps: Sequence::power(2.0, -1.0),
            delta: Sequence::power(2.0, -5.0),
            r: Sequence::power(2.0, -4.0),
            n: 3,
            p: 1.5,
        };
        let rep = gamma_trend(&s, &[1, 2, 3], (0.3, 0.3), &power(), &TrendOptions { hole_cells: 8, ..Default::default() }).unwrap();
        assert!(rep.passed);
        assert!(rep.rows.iter().all(|r| r.film == 0.0 && r.gap == 0.0));
    }

    #[test]
    fn finite_schedule_is_rejected() {
        let s = RegimeSequences {
            eps: Sequence::power(2.0, -1.0),
            delta: Sequence::power(2.0, -4.0),
            r: Sequence::power(2.0, -4.0),
            n: 3,
            p: 1.5,
        };
        assert!(gamma_trend(&s, &[1, 2, 3], (1.0, 0.0), &power(), &TrendOptions::default()).is_err());
    }
}
