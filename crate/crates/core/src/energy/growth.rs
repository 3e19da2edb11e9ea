//! Empirical checks of the p-growth and p-Lipschitz bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::density::{Density, EnergyDensity};

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub samples: usize,
    pub w_at_zero: f64,
    /// `W(0) = 0`
    pub zero_ok: bool,
    /// Number of samples with `W(F) < |F|^p - 1`.
    pub lower_violations: usize,
    /// Number of samples with `W(F) > β(|F|^p + 1)`.
    pub upper_violations: usize,
    /// Smallest `|F|` at which the upper bound failed.
    pub first_upper_violation: Option<f64>,
    /// `sup W(F) / (|F|^p + 1)` over the samples.
    pub beta_affine: f64,
    /// `sup_{F ≠ 0} W(F) / |F|^p` over the samples.
    pub beta_homogeneous: f64,
    /// `sup |W(F1) - W(F2)| / ((1 + |F1|^{p-1} + |F2|^{p-1}) |F1 - F2|)`.
    pub lipschitz: f64,
    pub passed: bool,
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

fn norm(f: &[f64]) -> f64 {
    f.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Samples `sample_budget` matrices uniformly in the ball of `radius`, plus
/// zero, scaled axis matrices and rank-one matrices, and measures the growth
/// constants of `density`.
pub fn validate_growth(density: &EnergyDensity, sample_budget: usize, radius: f64, seed: u64) -> GrowthReport {
    let (m, n, p, beta) = (density.m(), density.n(), density.p(), density.beta());
    let dim = m * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<Vec<f64>> = vec![vec![0.0; dim]];
    for a in 0..dim {
        for s in [0.25, 0.5, 1.0] {
            for sign in [1.0, -1.0] {
                let mut f = vec![0.0; dim];
                f[a] = sign * s * radius;
                samples.push(f);
            }
        }
    }
    for _ in 0..8 {
        let u: Vec<f64> = (0..m).map(|_| standard_normal(&mut rng)).collect();
        let v: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let mut f = vec![0.0; dim];
        for k in 0..n {
            for i in 0..m {
                f[k * m + i] = u[i] * v[k];
            }
        }
        let scale = radius * rng.gen::<f64>() / norm(&f).max(1e-300);
        f.iter_mut().for_each(|x| *x *= scale);
        samples.push(f);
    }
    for _ in 0..sample_budget {
        let mut f: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
        let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
        let s = r / norm(&f).max(1e-300);
        f.iter_mut().for_each(|x| *x *= s);
        samples.push(f);
    }

    let values: Vec<f64> = samples.iter().map(|f| density.value(f, 0.0)).collect();
    let w0 = values[0];
    let mut report = GrowthReport {
        samples: samples.len(),
        w_at_zero: w0,
        zero_ok: w0.abs() <= 1e-14,
        lower_violations: 0,
        upper_violations: 0,
        first_upper_violation: None,
        beta_affine: 0.0,
        beta_homogeneous: 0.0,
        lipschitz: 0.0,
        passed: false,
    };
    for (f, &w) in samples.iter().zip(&values) {
        let fp = norm(f).powf(p);
        let tol = 1e-12 * (fp + 1.0);
        if w < fp - 1.0 - tol {
            report.lower_violations += 1;
        }
        if w > beta * (fp + 1.0) + tol || !w.is_finite() {
            report.upper_violations += 1;
            let r = norm(f);
            report.first_upper_violation = Some(report.first_upper_violation.map_or(r, |x: f64| x.min(r)));
        }
        report.beta_affine = report.beta_affine.max(w / (fp + 1.0));
        if fp > 0.0 {
            report.beta_homogeneous = report.beta_homogeneous.max(w / fp);
        }
    }
    // pairs: consecutive samples plus small perturbations
    for i in 1..samples.len() {
        let (a, b) = (&samples[i - 1], &samples[i]);
        let mut pairs = vec![(a.clone(), values[i - 1], b.clone(), values[i])];
        let mut c = b.clone();
        for x in c.iter_mut() {
            *x += 1e-3 * radius * standard_normal(&mut rng);
        }
        let wc = density.value(&c, 0.0);
        pairs.push((b.clone(), values[i], c, wc));
        for (f1, w1, f2, w2) in pairs {
            let diff: Vec<f64> = f1.iter().zip(&f2).map(|(x, y)| x - y).collect();
            let dist = norm(&diff);
            if dist == 0.0 {
                continue;
            }
            let weight = 1.0 + norm(&f1).powf(p - 1.0) + norm(&f2).powf(p - 1.0);
            let ratio = (w1 - w2).abs() / (weight * dist);
            if ratio.is_finite() {
                report.lipschitz = report.lipschitz.max(ratio);
            } else {
                report.lipschitz = f64::INFINITY;
            }
        }
    }
    report.passed = report.zero_ok && report.lower_violations == 0 && report.upper_violations == 0;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_density_satisfies_growth() {
        let w = EnergyDensity::power(1, 3, 1.5).unwrap();
        let r = validate_growth(&w, 500, 4.0, 7);
        assert!(r.passed);
        assert!((r.beta_homogeneous - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seed_makes_report_reproducible() {
        let w = EnergyDensity::power(2, 2, 2.0).unwrap();
        assert_eq!(validate_growth(&w, 200, 3.0, 11), validate_growth(&w, 200, 3.0, 11));
    }
}
