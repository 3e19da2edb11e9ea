//! The reduced membrane density `W̄(F̄) = inf_z W(F̄ | z)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::density::{Density, EnergyDensity, Form, Term};
use crate::error::{Error, Result};

/// Settings of the deterministic grid-plus-refinement inner minimization.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolver {
    /// Grid points per axis at every level (odd, so the centre is sampled).
    pub points: usize,
    /// Number of candidate minima refined independently.
    pub candidates: usize,
    /// Stop refining when the grid spacing falls below this.
    pub tol: f64,
    /// Multiplier on the growth-derived span `(β(|F̄|^p + 1) + 1)^{1/p}`.
    pub span_factor: f64,
}

impl Default for InnerSolver {
    fn default() -> Self {
        Self { points: 41, candidates: 4, tol: 1e-10, span_factor: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionMode {
    /// Infimum over the last column of the base density.
    Wbar,
    /// Infimum over the last column of the p-homogeneous limit of the base.
    Gbar,
}

/// Reduced density over `m × (n-1)` matrices.
#[derive(Clone, Debug)]
pub struct ReducedDensity {
    base: EnergyDensity,
    mode: ReductionMode,
    inner: InnerSolver,
    closed: Option<EnergyDensity>,
}

impl ReducedDensity {
    pub fn new(base: EnergyDensity, inner: InnerSolver) -> Result<Self> {
        if base.n() < 2 {
            return Err(Error::InvalidDensity("reduction needs at least two columns".into()));
        }
        if inner.points < 3 {
            return Err(Error::InvalidDensity("inner grid needs at least 3 points per axis".into()));
        }
        let closed = closed_form(&base);
        Ok(Self { base, mode: ReductionMode::Wbar, inner, closed })
    }

    /// `ḡ`: the reduction of the p-homogeneous limit density of `base`.
    pub fn gbar(base: &EnergyDensity, inner: InnerSolver) -> Result<Self> {
        let g = base.homogeneous_limit().ok_or_else(|| Error::InvalidDensity("no closed-form scaling limit for this density".into()))?;
        let mut r = Self::new(g, inner)?;
        r.mode = ReductionMode::Gbar;
        Ok(r)
    }

    pub fn base(&self) -> &EnergyDensity {
        &self.base
    }
    pub fn mode(&self) -> ReductionMode {
        self.mode
    }
    pub fn inner(&self) -> &InnerSolver {
        &self.inner
    }

    /// Closed-form reduction when the base kind admits one.
    pub fn closed_form(&self) -> Option<&EnergyDensity> {
        self.closed.as_ref()
    }

    /// Radius of the ball that contains every minimizer in `z`.
    pub fn span(&self, fbar_norm: f64) -> f64 {
        let p = self.base.p();
        self.inner.span_factor * (self.base.beta() * (fbar_norm.powf(p) + 1.0) + 1.0).powf(1.0 / p)
    }

    /// `inf_z W(F̄ | z)` by grid search and refinement.
    pub fn reduce_wbar(&self, fbar: &DMatrix<f64>) -> Result<f64> {
        let (m, n) = (self.base.m(), self.base.n());
        if fbar.nrows() != m || fbar.ncols() != n - 1 {
            return Err(Error::Shape { expected_rows: m, expected_cols: n - 1, rows: fbar.nrows(), cols: fbar.ncols() });
        }
        self.minimize(fbar.as_slice(), 0.0).map(|(v, _)| v)
    }

    /// Minimum value and minimizing `z`.
    pub fn minimize(&self, fbar: &[f64], reg: f64) -> Result<(f64, Vec<f64>)> {
        let m = self.base.m();
        let nrm = fbar.iter().map(|x| x * x).sum::<f64>().sqrt();
        let span = self.span(nrm);
        let mut full = vec![0.0; fbar.len() + m];
        full[..fbar.len()].copy_from_slice(fbar);
        let off = fbar.len();
        let base = &self.base;
        let mut eval = |z: &[f64]| {
            full[off..].copy_from_slice(z);
            base.value(&full, reg)
        };

        let pts = self.inner.points | 1;
        let half = (pts / 2) as i64;
        let coarse = grid_scan(m, pts, &vec![0.0; m], span, &mut eval);
        let best = coarse.iter().min_by(|a, b| a.1.total_cmp(&b.1)).cloned().ok_or(Error::SpanTooSmall { span })?;
        if best.2.iter().any(|&k| k.abs() == half) {
            return Err(Error::SpanTooSmall { span });
        }

        let mut starts: Vec<(Vec<f64>, f64)> = local_minima(&coarse, m, pts);
        starts.sort_by(|a, b| a.1.total_cmp(&b.1));
        starts.truncate(self.inner.candidates.max(1));

        let mut winner = (best.1, best.0.clone());
        let coarse_h = span / half as f64;
        for (start, _) in starts {
            let mut center = start;
            let mut h = coarse_h;
            let mut value = f64::INFINITY;
            while h > self.inner.tol {
                let width = 2.0 * h;
                let pts_fine = pts.min(21) | 1;
                let scan = grid_scan(m, pts_fine, &center, width, &mut eval);
                let b = scan.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
                center = b.0.clone();
                value = b.1;
                h = width / (pts_fine / 2) as f64;
            }
            if value < winner.0 {
                winner = (value, center);
            }
        }
        Ok(winner)
    }
}

type Sample = (Vec<f64>, f64, Vec<i64>);

/// Evaluates on the tensor grid `center + span * k / half`, `k ∈ [-half, half]^m`.
fn grid_scan(m: usize, pts: usize, center: &[f64], span: f64, eval: &mut impl FnMut(&[f64]) -> f64) -> Vec<Sample> {
    let half = (pts / 2) as i64;
    let total = pts.pow(m as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![-half; m];
    let mut z = vec![0.0; m];
    for _ in 0..total {
        for a in 0..m {
            z[a] = center[a] + span * idx[a] as f64 / half as f64;
        }
        let v = eval(&z);
        out.push((z.clone(), v, idx.clone()));
        for a in 0..m {
            idx[a] += 1;
            if idx[a] > half {
                idx[a] = -half;
            } else {
                break;
            }
        }
    }
    out
}

fn local_minima(samples: &[Sample], m: usize, pts: usize) -> Vec<(Vec<f64>, f64)> {
    let half = (pts / 2) as i64;
    let index = |k: &[i64]| -> usize {
        let mut lin = 0usize;
        for a in (0..m).rev() {
            lin = lin * pts + (k[a] + half) as usize;
        }
        lin
    };
    let mut out = Vec::new();
    for s in samples {
        let mut is_min = true;
        for a in 0..m {
            for step in [-1i64, 1] {
                let mut k = s.2.clone();
                k[a] += step;
                if k[a].abs() > half {
                    continue;
                }
                if samples[index(&k)].1 < s.1 {
                    is_min = false;
                }
            }
        }
        if is_min {
            out.push((s.0.clone(), s.1));
        }
    }
    out
}

/// Closed-form `W̄` for single-term kinds and for sums whose every term is
/// minimized at `z = 0`.
fn closed_form(base: &EnergyDensity) -> Option<EnergyDensity> {
    if base.custom_part().is_some() {
        return None;
    }
    let (m, n) = (base.m(), base.n());
    let lat = m * (n - 1);
    let reduce = |t: &Term| -> Option<(Term, bool)> {
        let (form, zero_min) = match &t.form {
            Form::Plain => (Form::Plain, true),
            Form::Shifted(a) => {
                let last_zero = a[lat..].iter().all(|x| *x == 0.0);
                (Form::Shifted(a[..lat].to_vec()), last_zero)
            }
            Form::Wells(a) => (Form::Wells(a[..lat].to_vec()), false),
            Form::Right { matrix, cols } => {
                let k = *cols;
                let b: Vec<f64> = (0..k).map(|c| matrix[c * n + (n - 1)]).collect();
                let b2: f64 = b.iter().map(|x| x * x).sum();
                let mut top = vec![0.0; (n - 1) * k];
                for c in 0..k {
                    for r in 0..n - 1 {
                        top[c * (n - 1) + r] = matrix[c * n + r];
                    }
                }
                let mut zero_min = true;
                if b2 > 0.0 {
                    // M_top (I - b b^T / |b|^2)
                    let mut proj = vec![0.0; (n - 1) * k];
                    for r in 0..n - 1 {
                        let tb: f64 = (0..k).map(|c| top[c * (n - 1) + r] * b[c]).sum();
                        if tb.abs() > 1e-14 {
                            zero_min = false;
                        }
                        for c in 0..k {
                            proj[c * (n - 1) + r] = top[c * (n - 1) + r] - tb * b[c] / b2;
                        }
                    }
                    top = proj;
                }
                (Form::Right { matrix: top, cols: k }, zero_min)
            }
        };
        Some((Term { coefficient: t.coefficient, exponent: t.exponent, form }, zero_min))
    };
    let reduced: Vec<(Term, bool)> = base.terms().iter().map(reduce).collect::<Option<_>>()?;
    if reduced.len() > 1 && !reduced.iter().all(|(_, z)| *z) {
        return None;
    }
    let terms: Vec<Term> = reduced.into_iter().map(|(t, _)| t).collect();
    let d = EnergyDensity::sum(m, n - 1, base.p(), terms).ok()?;
    d.with_beta(base.beta()).ok()?.with_reg_eps(base.reg_eps()).ok()
}

impl Density for ReducedDensity {
    fn rows(&self) -> usize {
        self.base.m()
    }
    fn cols(&self) -> usize {
        self.base.n() - 1
    }
    fn exponent(&self) -> f64 {
        self.base.p()
    }
    fn value(&self, f: &[f64], reg: f64) -> f64 {
        if let Some(c) = &self.closed {
            return c.value(f, reg);
        }
        self.minimize(f, reg).map(|(v, _)| v).unwrap_or(f64::INFINITY)
    }
    fn gradient(&self, f: &[f64], reg: f64, out: &mut [f64]) {
        if let Some(c) = &self.closed {
            return c.gradient(f, reg, out);
        }
        // envelope theorem: the gradient of the infimum is the partial
        // gradient at the minimizer
        let m = self.base.m();
        let Ok((_, z)) = self.minimize(f, reg) else {
            out.iter_mut().for_each(|o| *o = f64::NAN);
            return;
        };
        let mut full = f.to_vec();
        full.extend_from_slice(&z);
        let mut g = vec![0.0; full.len()];
        self.base.gradient(&full, reg, &mut g);
        out.copy_from_slice(&g[..f.len()]);
        debug_assert_eq!(g.len() - f.len(), m);
    }
    fn stiffness(&self, f: &[f64], reg: f64) -> f64 {
        if let Some(c) = &self.closed {
            return c.stiffness(f, reg);
        }
        let mut full = f.to_vec();
        full.extend(std::iter::repeat_n(0.0, self.base.m()));
        self.base.stiffness(&full, reg)
    }
    fn lateral_isotropy(&self, lateral_cols: usize) -> bool {
        match &self.closed {
            Some(c) => c.lateral_isotropy(lateral_cols),
            None => self.base.lateral_isotropy(lateral_cols),
        }
    }
    fn is_convex(&self) -> bool {
        self.base.is_convex()
    }
}

/// Shared handle to the reduced density.
pub fn shared(r: ReducedDensity) -> Arc<dyn Density> {
    match r.closed.clone() {
        Some(c) => Arc::new(c),
        None => Arc::new(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_reduction_is_power() {
        let w = EnergyDensity::power(1, 3, 1.5).unwrap();
        let r = ReducedDensity::new(w, InnerSolver::default()).unwrap();
        let f = DMatrix::from_row_slice(1, 2, &[0.6, 0.8]);
        assert_relative_eq!(r.reduce_wbar(&f).unwrap(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(r.closed_form().unwrap().eval(&f).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn shifted_power_vanishes_at_reduced_shift() {
        let a = DMatrix::from_row_slice(1, 3, &[0.3, -0.2, 0.7]);
        let w = EnergyDensity::shifted(2.0, &a).unwrap();
        let r = ReducedDensity::new(w, InnerSolver::default()).unwrap();
        let abar = DMatrix::from_row_slice(1, 2, &[0.3, -0.2]);
        assert!(r.reduce_wbar(&abar).unwrap() < 1e-12);
    }

    #[test]
    fn shape_is_checked() {
        let w = EnergyDensity::power(2, 3, 2.0).unwrap();
        let r = ReducedDensity::new(w, InnerSolver::default()).unwrap();
        assert!(matches!(r.reduce_wbar(&DMatrix::zeros(2, 3)), Err(Error::Shape { .. })));
    }

    #[test]
    fn span_violation_is_reported() {
        // |F|^1.5 - 2 z breaks the lower growth bound; its minimizer in z
        // (z ≈ 1.78) lies outside the growth-derived span 2^{2/3}
        let f = std::sync::Arc::new(|x: &[f64]| (x[0] * x[0] + x[1] * x[1]).powf(0.75) - 2.0 * x[1]);
        let w = EnergyDensity::custom("tilted", 1, 2, 1.5, f).unwrap();
        let r = ReducedDensity::new(w, InnerSolver::default()).unwrap();
        let err = r.reduce_wbar(&DMatrix::from_row_slice(1, 1, &[0.0])).unwrap_err();
        assert!(matches!(err, Error::SpanTooSmall { .. }));
    }

    #[test]
    fn anisotropic_reduction_closed_form() {
        // M couples the lateral column to the last one
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let w = EnergyDensity::anisotropic(1, 2, 2.0, &m).unwrap();
        let r = ReducedDensity::new(w.clone(), InnerSolver::default()).unwrap();
        let f = DMatrix::from_row_slice(1, 1, &[0.8]);
        let closed = r.closed_form().unwrap().eval(&f).unwrap();
        assert_relative_eq!(r.reduce_wbar(&f).unwrap(), closed, epsilon = 1e-9);
    }
}
