//! The scaling-limit density `g(F) = lim_{r→0} r^p Q W(F / r)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::density::{frobenius, Density, EnergyDensity};
use super::envelope::{AmplitudeGrid, EnvelopeApprox};
use crate::error::{Error, Result};

/// `r^p W(F / r)`
pub struct ScaledDensity {
    base: Arc<dyn Density>,
    r: f64,
}

impl ScaledDensity {
    pub fn new(base: Arc<dyn Density>, r: f64) -> Self {
        Self { base, r }
    }
    fn rescale(&self, f: &[f64]) -> Vec<f64> {
        f.iter().map(|x| x / self.r).collect()
    }
}

impl Density for ScaledDensity {
    fn rows(&self) -> usize {
        self.base.rows()
    }
    fn cols(&self) -> usize {
        self.base.cols()
    }
    fn exponent(&self) -> f64 {
        self.base.exponent()
    }
    fn value(&self, f: &[f64], reg: f64) -> f64 {
        let p = self.base.exponent();
        self.r.powf(p) * self.base.value(&self.rescale(f), reg / self.r)
    }
    fn gradient(&self, f: &[f64], reg: f64, out: &mut [f64]) {
        let p = self.base.exponent();
        self.base.gradient(&self.rescale(f), reg / self.r, out);
        let s = self.r.powf(p - 1.0);
        out.iter_mut().for_each(|o| *o *= s);
    }
    fn stiffness(&self, f: &[f64], reg: f64) -> f64 {
        let p = self.base.exponent();
        self.r.powf(p - 2.0) * self.base.stiffness(&self.rescale(f), reg / self.r)
    }
    fn is_convex(&self) -> bool {
        self.base.is_convex()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GLimitOptions {
    /// Lamination depth used as the surrogate of the quasiconvexification.
    pub depth: usize,
    pub direction_budget: usize,
    /// Lamination grid points per axis.
    pub points: usize,
    /// Relative tolerance on the spread of the extrapolated limits.
    pub rel_tol: f64,
}

impl Default for GLimitOptions {
    fn default() -> Self {
        Self { depth: 2, direction_budget: 16, points: 41, rel_tol: 1e-4 }
    }
}

/// Default schedule `r ∈ {1, 1e-1, 1e-2, 1e-3}`.
pub fn default_schedule() -> Vec<f64> {
    vec![1.0, 1e-1, 1e-2, 1e-3]
}

#[derive(Clone, Debug, PartialEq)]
pub struct GLimit {
    pub value: f64,
    /// `(r, r^p e(W)(F / r))` for every scale.
    pub raw: Vec<(f64, f64)>,
    /// Fitted power of the correction term, when one was detected.
    pub rate: Option<f64>,
    /// Relative spread between the extrapolations of consecutive triples
    /// (zero with only three scales).
    pub residual: f64,
    /// Lamination depth used, or `None` when the base is convex and the
    /// envelope equals the density.
    pub depth: Option<usize>,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Extrapolates `a(r) = L + c r^q` through three points with decreasing `r`.
/// Returns the limit and the fitted rate.
pub fn extrapolate_triple(r: [f64; 3], a: [f64; 3]) -> Result<(f64, Option<f64>)> {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let d1 = a[0] - a[1];
    let d2 = a[1] - a[2];
    if d2.abs() <= 1e-13 * scale {
        return Ok((a[2], None));
    }
    if d1.abs() <= 1e-13 * scale || d1 * d2 < 0.0 {
        return Err(Error::LimitNotResolved(format!("raw values {a:?} oscillate")));
    }
    let target = d1 / d2;
    let h = |q: f64| (r[0].powf(q) - r[1].powf(q)) / (r[1].powf(q) - r[2].powf(q));
    let h0 = (r[0] / r[1]).ln() / (r[1] / r[2]).ln();
    if target <= h0 * (1.0 + 1e-12) {
        return Err(Error::LimitNotResolved(format!("raw values {a:?} do not contract")));
    }
    let (mut lo, mut hi) = (1e-9, 60.0);
    if h(hi) < target {
        // correction decays faster than any resolvable power
        return Ok((a[2], None));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    let c = d2 / (r[1].powf(q) - r[2].powf(q));
    Ok((a[2] - c * r[2].powf(q), Some(q)))
}

fn check_schedule(r: &[f64]) -> Result<()> {
    if r.len() < 3 {
        return Err(Error::LimitNotResolved(format!("schedule needs ≥ 3 scales, got {}", r.len())));
    }
    if r.iter().any(|x| !(*x > 0.0) || !x.is_finite()) || r.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::LimitNotResolved("schedule must be positive and strictly decreasing".into()));
    }
    if r[0] / r[r.len() - 1] < 100.0 * (1.0 - 1e-12) {
        return Err(Error::LimitNotResolved("schedule must span at least two decades".into()));
    }
    Ok(())
}

/// Extrapolated `lim r^p Q W(F / r)` with `Q` replaced by the lamination
/// envelope of fixed depth.
pub fn g_limit(density: &EnergyDensity, f: &DMatrix<f64>, r_schedule: &[f64], opts: &GLimitOptions) -> Result<GLimit> {
    if f.nrows() != density.m() || f.ncols() != density.n() {
        return Err(Error::Shape { expected_rows: density.m(), expected_cols: density.n(), rows: f.nrows(), cols: f.ncols() });
    }
    check_schedule(r_schedule)?;
    let p = density.p();
    let base: Arc<dyn Density> = Arc::new(density.clone());
    let convex = density.is_convex();
    let fmax = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut raw = Vec::with_capacity(r_schedule.len());
    for &r in r_schedule {
        let scaled: Arc<dyn Density> = Arc::new(ScaledDensity::new(base.clone(), r));
        let v = if convex {
            scaled.value(f.as_slice(), 0.0)
        } else {
            let dim = density.m() * density.n();
            let grid = AmplitudeGrid::centered(dim, (2.0 * fmax).max(1.0), opts.points | 1);
            let env = EnvelopeApprox::new(scaled, opts.depth, opts.direction_budget, grid)?;
            env.value_at_depth(f.as_slice(), opts.depth).value
        };
        raw.push((r, v));
    }

    let mut limits = Vec::new();
    let mut rate = None;
    for w in raw.windows(3) {
        let (l, q) = extrapolate_triple([w[0].0, w[1].0, w[2].0], [w[0].1, w[1].1, w[2].1])?;
        limits.push(l);
        rate = q;
    }
    let value = *limits.last().unwrap();
    let residual = if limits.len() >= 2 {
        let prev = limits[limits.len() - 2];
        (value - prev).abs() / value.abs().max(1e-300)
    } else {
        0.0
    };
    if value != 0.0 && residual > opts.rel_tol {
        return Err(Error::LimitNotResolved(format!("residual {residual:.3e} above {:.1e}", opts.rel_tol)));
    }
    let norm_p = frobenius(f).powf(p);
    let slack = 1e-9 * norm_p.max(1e-300);
    Ok(GLimit {
        value,
        raw,
        rate,
        residual,
        depth: if convex { None } else { Some(opts.depth) },
        lower_ok: norm_p <= value + slack,
        upper_ok: value <= density.beta() * norm_p + slack,
    })
}
