use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reference lateral set `A` (and the averaging set `B` for the pair).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `(0, 1)²`
    Square,
    /// Unit disk.
    Ball,
    /// `A = (-1, 1)²`, averages over the annulus `B = {1/2 < |y| < 1}`.
    Pair,
}

/// Smooth test profiles `û(y, τ)` on `A × (0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Constant,
    /// `y₁`
    Linear,
    /// `y₁ τ + sin(π y₂) cos(π τ)`
    Mixed,
}

impl Profile {
    fn eval(&self, y1: f64, y2: f64, tau: f64) -> (f64, [f64; 3]) {
        match self {
            Profile::Constant => (1.0, [0.0; 3]),
            Profile::Linear => (y1, [1.0, 0.0, 0.0]),
            Profile::Mixed => {
                let (s2, c2) = (PI * y2).sin_cos();
                let (st, ct) = (PI * tau).sin_cos();
                (y1 * tau + s2 * ct, [tau, PI * c2 * ct, y1 - PI * s2 * st])
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Region {
    Square(f64, f64),
    Annulus(f64, f64),
}

impl Shape {
    fn domain(&self) -> Region {
        match self {
            Shape::Square => Region::Square(0.0, 1.0),
            Shape::Ball => Region::Annulus(0.0, 1.0),
            Shape::Pair => Region::Square(-1.0, 1.0),
        }
    }
    fn averaging(&self) -> Region {
        match self {
            Shape::Pair => Region::Annulus(0.5, 1.0),
            s => s.domain(),
        }
    }
}

struct Quad(GaussLegendre);

impl Quad {
    /// `∫ f(x₁, x₂, t)` over `ρ·region × (0, δ)`.
    fn integrate<F: Fn(f64, f64, f64) -> f64>(&self, region: Region, rho: f64, delta: f64, f: F) -> f64 {
        let q = &self.0;
        match region {
            Region::Square(a, b) => {
                q.integrate(rho * a, rho * b, |x1| q.integrate(rho * a, rho * b, |x2| q.integrate(0.0, delta, |t| f(x1, x2, t))))
            }
            Region::Annulus(a, b) => q.integrate(rho * a, rho * b, |s| {
                s * q.integrate(0.0, 2.0 * PI, |th| {
                    let (sn, cs) = th.sin_cos();
                    q.integrate(0.0, delta, |t| f(s * cs, s * sn, t))
                })
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareRow {
    pub rho: f64,
    pub delta: f64,
    pub profile: Profile,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub shape: Shape,
    pub p: f64,
    pub rows: Vec<PoincareRow>,
    /// Largest ratio over profiles, per `(ρ, δ)`.
    pub max_by_scale: Vec<(f64, f64, f64)>,
    /// `(max - min) / max` of `max_by_scale`.
    pub variation: f64,
    pub passed: bool,
}

/// Ratios `∫|u - ū|^p / ∫(ρ^p |D_α u|^p + δ^p |D_n u|^p)` on the film
/// piece `ρA × (0, δ)` for `u(x) = û(x_α/ρ, x_n/δ)`, over a grid of scales.
pub fn poincare_check(shape: Shape, p: f64, rhos: &[f64], deltas: &[f64], profiles: &[Profile], order: usize) -> Result<PoincareReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Domain(format!("need p >= 1, got {p}")));
    }
    if rhos.is_empty() || deltas.is_empty() || profiles.is_empty() || rhos.iter().chain(deltas).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("need positive scales and at least one profile".into()));
    }
    let quad = Quad(GaussLegendre::new(NonZeroUsize::new(order.max(2)).unwrap()));
    let mut rows = Vec::new();
    let mut max_by_scale = Vec::new();
    for &rho in rhos {
        for &delta in deltas {
            let mut best: f64 = 0.0;
            for &profile in profiles {
                let u = |x1: f64, x2: f64, t: f64| profile.eval(x1 / rho, x2 / rho, t / delta);
                let avg_region = shape.averaging();
                let mean =
                    quad.integrate(avg_region, rho, delta, |a, b, t| u(a, b, t).0) / quad.integrate(avg_region, rho, delta, |_, _, _| 1.0);
                let region = shape.domain();
                let lhs = quad.integrate(region, rho, delta, |a, b, t| (u(a, b, t).0 - mean).abs().powf(p));
                let rhs = quad.integrate(region, rho, delta, |a, b, t| {
                    let g = u(a, b, t).1;
                    let lateral = (g[0] / rho).hypot(g[1] / rho);
                    let normal = (g[2] / delta).abs();
                    rho.powf(p) * lateral.powf(p) + delta.powf(p) * normal.powf(p)
                });
                let ratio = if lhs == 0.0 || lhs <= 1e-14 * rhs { 0.0 } else { lhs / rhs };
                best = best.max(ratio);
                rows.push(PoincareRow { rho, delta, profile, lhs, rhs, ratio });
            }
            max_by_scale.push((rho, delta, best));
        }
    }
    let hi = max_by_scale.iter().map(|m| m.2).fold(0.0, f64::max);
    let lo = max_by_scale.iter().map(|m| m.2).fold(f64::INFINITY, f64::min);
    let variation = if hi == 0.0 { 0.0 } else { (hi - lo) / hi };
    Ok(PoincareReport { shape, p, rows, max_by_scale, variation, passed: variation < 0.05 })
}
