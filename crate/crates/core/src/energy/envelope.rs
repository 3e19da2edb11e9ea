//! Rank-one lamination envelopes.
//!
//! The density is tabulated on a regular grid in matrix space. Level `k+1`
//! is obtained from level `k` by taking, along every grid line parallel to a
//! rank-one lattice direction `a ⊗ b`, the lower convex hull of the level-`k`
//! values; the pointwise minimum over directions is kept. Each hull
//! realizes `inf t·e_k(F + (1-t)s a⊗b) + (1-t)·e_k(F - t s a⊗b)` over
//! amplitudes sampled by the grid. Off-grid values use multilinear
//! interpolation capped by the base density, so `e_{k+1} ≤ e_k ≤ W`
//! everywhere and `e_k = W` for convex `W`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::density::Density;
use crate::error::{Error, Result};

/// Tabulation box for the lamination: `points` nodes per axis on
/// `center ± half_width`.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeGrid {
    pub center: Vec<f64>,
    pub half_width: f64,
    pub points: usize,
}

impl AmplitudeGrid {
    pub fn centered(dim: usize, half_width: f64, points: usize) -> Self {
        Self { center: vec![0.0; dim], half_width, points }
    }
    fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }
}

pub const MAX_NODES: usize = 4_000_000;

pub struct EnvelopeApprox {
    base: Arc<dyn Density>,
    depth: usize,
    directions: Vec<Vec<i64>>,
    grid: AmplitudeGrid,
    dim: usize,
    strides: Vec<usize>,
    levels: Vec<Vec<f64>>,
}

impl std::fmt::Debug for EnvelopeApprox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnvelopeApprox")
            .field("depth", &self.depth)
            .field("directions", &self.directions.len())
            .field("grid", &self.grid)
            .finish()
    }
}

/// Result of a pointwise envelope evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeValue {
    pub value: f64,
    /// False when the point lies outside the tabulation box and the base
    /// value was returned.
    pub in_box: bool,
}

/// Rank-one integer directions in `{-1, 0, 1}^{rows·cols}`, fewest nonzeros
/// first.
pub fn rank_one_directions(rows: usize, cols: usize) -> Vec<Vec<i64>> {
    let dim = rows * cols;
    let mut out = Vec::new();
    let total = 3usize.pow(dim as u32);
    for code in 1..total {
        let mut v = vec![0i64; dim];
        let mut c = code;
        for x in v.iter_mut() {
            *x = (c % 3) as i64 - 1;
            c /= 3;
        }
        let first = v.iter().find(|x| **x != 0).copied().unwrap_or(0);
        if first != 1 {
            continue;
        }
        if is_rank_one(&v, rows, cols) {
            out.push(v);
        }
    }
    out.sort_by(|a, b| {
        let na = a.iter().filter(|x| **x != 0).count();
        let nb = b.iter().filter(|x| **x != 0).count();
        na.cmp(&nb).then_with(|| b.cmp(a))
    });
    out
}

pub fn is_rank_one(v: &[i64], rows: usize, cols: usize) -> bool {
    let at = |i: usize, k: usize| v[k * rows + i];
    for i in 0..rows {
        for j in i + 1..rows {
            for k in 0..cols {
                for l in k + 1..cols {
                    if at(i, k) * at(j, l) - at(i, l) * at(j, k) != 0 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Lower convex hull of `(k, y_k)`, evaluated back at every `k`.
/// Points lying on a hull edge are kept as vertices.
pub fn lower_hull(y: &[f64], out: &mut Vec<f64>) {
    let n = y.len();
    out.clear();
    if n <= 2 {
        out.extend_from_slice(y);
        return;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // b strictly above the chord from a to i
            let lhs = (y[b] - y[a]) * (i - a) as f64;
            let rhs = (y[i] - y[a]) * (b - a) as f64;
            if lhs > rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        for k in a..b {
            if k == a {
                out.push(y[a]);
            } else {
                let t = (k - a) as f64 / (b - a) as f64;
                out.push(y[a] + t * (y[b] - y[a]));
            }
        }
    }
    out.push(y[n - 1]);
}

impl EnvelopeApprox {
    pub fn new(base: Arc<dyn Density>, depth: usize, direction_budget: usize, grid: AmplitudeGrid) -> Result<Self> {
        let dim = base.rows() * base.cols();
        if grid.center.len() != dim {
            return Err(Error::Shape { expected_rows: dim, expected_cols: 1, rows: grid.center.len(), cols: 1 });
        }
        if grid.points < 3 || !(grid.half_width > 0.0) {
            return Err(Error::InvalidDensity("lamination grid needs ≥ 3 points and a positive width".into()));
        }
        let total = grid
            .points
            .checked_pow(dim as u32)
            .filter(|t| *t <= MAX_NODES)
            .ok_or_else(|| Error::InvalidDensity(format!("lamination grid {}^{dim} exceeds {MAX_NODES} nodes", grid.points)))?;
        let mut directions = rank_one_directions(base.rows(), base.cols());
        directions.truncate(direction_budget.max(1));
        let strides: Vec<usize> = (0..dim).map(|a| grid.points.pow(a as u32)).collect();

        let mut env = Self { base, depth, directions, grid, dim, strides, levels: Vec::new() };
        let mut coords = vec![0.0; dim];
        let level0: Vec<f64> = (0..total)
            .map(|idx| {
                env.node_coords(idx, &mut coords);
                env.base.value(&coords, 0.0)
            })
            .collect();
        env.levels.push(level0);
        for _ in 0..depth {
            let next = env.laminate_level(env.levels.last().unwrap());
            env.levels.push(next);
        }
        Ok(env)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
    pub fn directions(&self) -> &[Vec<i64>] {
        &self.directions
    }
    pub fn grid(&self) -> &AmplitudeGrid {
        &self.grid
    }

    fn node_multi(&self, idx: usize) -> Vec<usize> {
        let mut k = vec![0; self.dim];
        let mut rest = idx;
        for a in 0..self.dim {
            k[a] = rest % self.grid.points;
            rest /= self.grid.points;
        }
        k
    }

    fn node_coords(&self, idx: usize, out: &mut [f64]) {
        let h = self.grid.spacing();
        let mut rest = idx;
        for a in 0..self.dim {
            let k = rest % self.grid.points;
            rest /= self.grid.points;
            out[a] = self.grid.center[a] - self.grid.half_width + h * k as f64;
        }
    }

    fn laminate_level(&self, prev: &[f64]) -> Vec<f64> {
        let pts = self.grid.points as i64;
        let mut next = prev.to_vec();
        let mut line = Vec::new();
        let mut vals = Vec::new();
        let mut hull = Vec::new();
        for v in &self.directions {
            let offset: i64 = v.iter().zip(&self.strides).map(|(d, s)| d * *s as i64).sum();
            for idx in 0..prev.len() {
                let k = self.node_multi(idx);
                let has_pred = k.iter().zip(v).all(|(ka, va)| {
                    let q = *ka as i64 - va;
                    (0..pts).contains(&q)
                });
                if has_pred {
                    continue;
                }
                line.clear();
                let mut cur = k.clone();
                let mut lin = idx as i64;
                loop {
                    line.push(lin as usize);
                    let mut inside = true;
                    for (ka, va) in cur.iter_mut().zip(v) {
                        let q = *ka as i64 + va;
                        if !(0..pts).contains(&q) {
                            inside = false;
                            break;
                        }
                        *ka = q as usize;
                    }
                    if !inside {
                        break;
                    }
                    lin += offset;
                }
                if line.len() < 3 {
                    continue;
                }
                vals.clear();
                vals.extend(line.iter().map(|&i| prev[i]));
                lower_hull(&vals, &mut hull);
                for (&i, &h) in line.iter().zip(&hull) {
                    if h < next[i] {
                        next[i] = h;
                    }
                }
            }
        }
        next
    }

    fn interpolate(&self, level: &[f64], f: &[f64], grad: Option<&mut [f64]>) -> Option<f64> {
        let h = self.grid.spacing();
        let last = (self.grid.points - 1) as f64;
        let mut base_idx = vec![0usize; self.dim];
        let mut frac = vec![0.0; self.dim];
        for a in 0..self.dim {
            let u = (f[a] - (self.grid.center[a] - self.grid.half_width)) / h;
            if !(u >= -1e-12 && u <= last + 1e-12) {
                return None;
            }
            let u = u.clamp(0.0, last);
            let i = (u.floor() as usize).min(self.grid.points - 2);
            base_idx[a] = i;
            frac[a] = u - i as f64;
        }
        let mut value = 0.0;
        let mut g = vec![0.0; self.dim];
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut lin = 0;
            for a in 0..self.dim {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                lin += (base_idx[a] + bit) * self.strides[a];
            }
            let y = level[lin];
            value += w * y;
            for a in 0..self.dim {
                let bit = (corner >> a) & 1;
                let mut wa = if bit == 1 { 1.0 } else { -1.0 };
                for b in 0..self.dim {
                    if b != a {
                        let bb = (corner >> b) & 1;
                        wa *= if bb == 1 { frac[b] } else { 1.0 - frac[b] };
                    }
                }
                g[a] += wa * y / h;
            }
        }
        if let Some(out) = grad {
            out.copy_from_slice(&g);
        }
        Some(value)
    }

    /// Envelope value at lamination depth `k ≤ depth`.
    pub fn value_at_depth(&self, f: &[f64], k: usize) -> EnvelopeValue {
        let k = k.min(self.depth);
        let base = self.base.value(f, 0.0);
        match self.interpolate(&self.levels[k], f, None) {
            Some(v) => EnvelopeValue { value: v.min(base), in_box: true },
            None => EnvelopeValue { value: base, in_box: false },
        }
    }

    /// Depth-`depth` envelope at `F`.
    pub fn laminate_envelope(&self, f: &DMatrix<f64>) -> Result<EnvelopeValue> {
        let (r, c) = (self.base.rows(), self.base.cols());
        if f.nrows() != r || f.ncols() != c {
            return Err(Error::Shape { expected_rows: r, expected_cols: c, rows: f.nrows(), cols: f.ncols() });
        }
        Ok(self.value_at_depth(f.as_slice(), self.depth))
    }
}

impl Density for EnvelopeApprox {
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
        let base = self.base.value(f, reg);
        match self.interpolate(&self.levels[self.depth], f, None) {
            Some(v) => v.min(base),
            None => base,
        }
    }
    fn gradient(&self, f: &[f64], reg: f64, out: &mut [f64]) {
        let base = self.base.value(f, reg);
        let mut g = vec![0.0; self.dim];
        match self.interpolate(&self.levels[self.depth], f, Some(&mut g)) {
            Some(v) if v < base => out.copy_from_slice(&g),
            _ => self.base.gradient(f, reg, out),
        }
    }
    fn stiffness(&self, f: &[f64], reg: f64) -> f64 {
        self.base.stiffness(f, reg)
    }
    fn lateral_isotropy(&self, _lateral_cols: usize) -> bool {
        false
    }
    fn is_convex(&self) -> bool {
        self.base.is_convex()
    }
}
