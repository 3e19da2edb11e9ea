//! Preconditioned L-BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub(crate) struct Problem<'a> {
    /// Writes the gradient and returns the value.
    pub eval: &'a dyn Fn(&[f64], &mut [f64]) -> f64,
    /// Refreshes the inverse diagonal preconditioner at a point.
    pub precond: &'a dyn Fn(&[f64]) -> Vec<f64>,
    /// `true` for degrees of freedom that may move.
    pub free: &'a [bool],
}

pub(crate) struct Settings {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub precond_every: usize,
}

pub(crate) struct Outcome {
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mask(g: &mut [f64], free: &[bool]) {
    for (gi, &f) in g.iter_mut().zip(free) {
        if !f {
            *gi = 0.0;
        }
    }
}

pub(crate) fn minimize(prob: &Problem, x: &mut [f64], set: &Settings) -> Result<Outcome> {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut f = (prob.eval)(x, &mut g);
    if !f.is_finite() {
        return Err(Error::BlowUp);
    }
    mask(&mut g, prob.free);
    let mut hdiag = prob.precond(x);
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut history = vec![f];
    let mut gnorm = dot(&g, &g).sqrt();
    let mut iters = 0;
    let mut stalls = 0;
    while gnorm > set.grad_tol && iters < set.max_iters {
        iters += 1;
        if set.precond_every > 0 && iters % set.precond_every == 0 {
            hdiag = prob.precond(x);
        }
        let mut d = two_loop(&g, &pairs, &hdiag);
        mask(&mut d, prob.free);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().zip(&hdiag).map(|(gi, h)| -gi * h).collect();
            slope = dot(&g, &d);
            if !(slope < 0.0) {
                break;
            }
        }
        let ls = line_search(prob, x, f, &d, slope, set)?;
        let Some((alpha, f_new, g_new)) = ls else {
            // no acceptable step: restart from the preconditioned gradient once
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            stalls += 1;
            if stalls > 3 {
                break;
            }
            continue;
        };
        let s: Vec<f64> = d.iter().map(|di| alpha * di).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi += si;
        }
        let sy = dot(&s, &y);
        if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == set.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let decrease = f - f_new;
        f = f_new;
        g = g_new;
        history.push(f);
        gnorm = dot(&g, &g).sqrt();
        if decrease <= 1e-16 * f.abs() {
            stalls += 1;
            if stalls > 200 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    Ok(Outcome { value: f, grad_norm: gnorm, iterations: iters, converged: gnorm <= set.grad_tol, history })
}

impl Problem<'_> {
    fn precond(&self, x: &[f64]) -> Vec<f64> {
        let mut h = (self.precond)(x);
        mask(&mut h, self.free);
        h
    }
}

fn two_loop(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, hdiag: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    // scale the diagonal so that it matches the newest curvature pair
    let tau = match pairs.back() {
        Some((s, y, _)) => {
            let yhy: f64 = y.iter().zip(hdiag).map(|(yi, h)| yi * yi * h).sum();
            if yhy > 0.0 {
                dot(s, y) / yhy
            } else {
                1.0
            }
        }
        None => 1.0,
    };
    let mut r: Vec<f64> = q.iter().zip(hdiag).map(|(qi, h)| tau * h * qi).collect();
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.iter_mut().for_each(|v| *v = -*v);
    r
}

type Trial = (f64, f64, Vec<f64>);

fn trial(prob: &Problem, x: &[f64], d: &[f64], alpha: f64) -> (f64, Vec<f64>) {
    let xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + alpha * di).collect();
    let mut g = vec![0.0; x.len()];
    let f = (prob.eval)(&xt, &mut g);
    mask(&mut g, prob.free);
    (f, g)
}

/// Relative size of energy changes treated as roundoff.
pub(crate) const ROUNDOFF: f64 = 1e-12;

/// Once energy differences drown in roundoff, sufficient decrease is read
/// off the slope instead (Hager and Zhang).
fn approx_wolfe(f: f64, f0: f64, slope: f64, slope0: f64, set: &Settings) -> bool {
    f <= f0 + ROUNDOFF * f0.abs() && slope <= (2.0 * set.c1 - 1.0) * slope0 && slope >= set.c2 * slope0
}

/// Strong-Wolfe search; `None` when no step satisfies the conditions.
fn line_search(prob: &Problem, x: &[f64], f0: f64, d: &[f64], slope0: f64, set: &Settings) -> Result<Option<Trial>> {
    let mut alpha = 1.0;
    let (mut lo, mut f_lo, mut slope_lo) = (0.0, f0, slope0);
    let mut best: Option<Trial> = None;
    for i in 0..40 {
        let (f, g) = trial(prob, x, d, alpha);
        if !f.is_finite() {
            if i == 39 {
                return Err(Error::BlowUp);
            }
            alpha = 0.5 * (lo + alpha);
            continue;
        }
        let slope = dot(&g, d);
        if approx_wolfe(f, f0, slope, slope0, set) {
            return Ok(Some((alpha, f, g)));
        }
        if f > f0 + set.c1 * alpha * slope0 || (i > 0 && f >= f_lo) {
            return Ok(zoom(prob, x, f0, d, slope0, set, (lo, f_lo, slope_lo), (alpha, f, slope)).or(best));
        }
        if slope.abs() <= -set.c2 * slope0 {
            return Ok(Some((alpha, f, g)));
        }
        if slope >= 0.0 {
            return Ok(zoom(prob, x, f0, d, slope0, set, (alpha, f, slope), (lo, f_lo, slope_lo)).or(Some((alpha, f, g))));
        }
        best = Some((alpha, f, g));
        lo = alpha;
        f_lo = f;
        slope_lo = slope;
        alpha *= 2.0;
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn zoom(
    prob: &Problem,
    x: &[f64],
    f0: f64,
    d: &[f64],
    slope0: f64,
    set: &Settings,
    mut lo: (f64, f64, f64),
    mut hi: (f64, f64, f64),
) -> Option<Trial> {
    let mut best: Option<Trial> = None;
    for _ in 0..40 {
        let (a0, a1) = (lo.0.min(hi.0), lo.0.max(hi.0));
        let width = a1 - a0;
        // cubic interpolation, safeguarded to the middle of the bracket
        let mut a = cubic_min(lo, hi).unwrap_or(0.5 * (lo.0 + hi.0));
        if !(a > a0 + 0.1 * width && a < a1 - 0.1 * width) {
            a = 0.5 * (lo.0 + hi.0);
        }
        let (f, g) = trial(prob, x, d, a);
        if !f.is_finite() {
            hi = (a, f64::INFINITY, 0.0);
            continue;
        }
        let slope = dot(&g, d);
        if approx_wolfe(f, f0, slope, slope0, set) {
            return Some((a, f, g));
        }
        if f > f0 + set.c1 * a * slope0 || f >= lo.1 {
            hi = (a, f, slope);
        } else {
            if slope.abs() <= -set.c2 * slope0 {
                return Some((a, f, g));
            }
            if slope * (hi.0 - lo.0) >= 0.0 {
                hi = lo;
            }
            lo = (a, f, slope);
            best = Some((a, f, g));
        }
        if width < 1e-14 * a1.max(1e-300) {
            break;
        }
    }
    // accept a sufficient-decrease step even if the curvature test failed
    best
}

fn cubic_min(a: (f64, f64, f64), b: (f64, f64, f64)) -> Option<f64> {
    let (x0, f0, g0) = a;
    let (x1, f1, g1) = b;
    if !f1.is_finite() {
        return None;
    }
    let d1 = g0 + g1 - 3.0 * (f0 - f1) / (x0 - x1);
    let disc = d1 * d1 - g0 * g1;
    if disc < 0.0 {
        return None;
    }
    let d2 = (x1 - x0).signum() * disc.sqrt();
    let den = g1 - g0 + 2.0 * d2;
    if den == 0.0 {
        return None;
    }
    let v = x1 - (x1 - x0) * (g1 + d2 - d1) / den;
    v.is_finite().then_some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let eval = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let pre = |_: &[f64]| vec![1.0, 1.0];
        let free = [true, true];
        let prob = Problem { eval: &eval, precond: &pre, free: &free };
        let mut x = vec![-1.2, 1.0];
        let set = Settings { grad_tol: 1e-10, max_iters: 500, memory: 10, c1: 1e-4, c2: 0.9, precond_every: 0 };
        let out = minimize(&prob, &mut x, &set).unwrap();
        assert!(out.converged);
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fixed_coordinates_do_not_move() {
        let eval = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - x[1]);
            g[1] = -2.0 * (x[0] - x[1]) + 2.0 * x[1];
            (x[0] - x[1]).powi(2) + x[1] * x[1]
        };
        let pre = |_: &[f64]| vec![1.0, 1.0];
        let free = [true, false];
        let prob = Problem { eval: &eval, precond: &pre, free: &free };
        let mut x = vec![0.0, 3.0];
        let set = Settings { grad_tol: 1e-12, max_iters: 100, memory: 5, c1: 1e-4, c2: 0.9, precond_every: 0 };
        minimize(&prob, &mut x, &set).unwrap();
        assert_eq!(x[1], 3.0);
        assert!((x[0] - 3.0).abs() < 1e-10);
    }
}
