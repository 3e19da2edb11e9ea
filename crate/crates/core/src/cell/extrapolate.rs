use serde::{Deserialize, Serialize};

use crate::energy::extrapolate_triple;
use crate::error::{Error, Result};

/// How `φ_N` approaches its limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TailModel {
    /// `φ_N = φ_∞ + a N^{-q}`
    Power,
    /// `φ_N^{-1/(p-1)} = A + B N^{-q}`, exact for radial capacities and
    /// equal to the power model to leading order.
    Capacitary { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation {
    pub limit: f64,
    /// Largest deviation of the fixed-rate fit from the data, relative to
    /// the limit.
    pub residual: f64,
    pub rate: f64,
    /// Fit through the last three points with a free rate, when it exists.
    pub free_limit: Option<f64>,
    pub free_rate: Option<f64>,
}

type Map = Box<dyn Fn(f64) -> f64>;

/// Least-squares fit with the tail rate `q` fixed, plus a free-rate fit.
pub fn extrapolate(n_values: &[f64], phi: &[f64], q: f64, model: TailModel) -> Result<Extrapolation> {
    if n_values.len() != phi.len() {
        return Err(Error::Domain("N and φ lists differ in length".into()));
    }
    if n_values.len() < 3 {
        return Err(Error::TooFewPoints(n_values.len()));
    }
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("N values must increase".into()));
    }
    let scale = phi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for w in phi.windows(2) {
        if w[1] > w[0] + 1e-6 * scale {
            return Err(Error::NonMonotone { previous: w[0], next: w[1] });
        }
    }
    if scale == 0.0 {
        return Ok(Extrapolation { limit: 0.0, residual: 0.0, rate: q, free_limit: Some(0.0), free_rate: None });
    }
    let (fwd, inv): (Map, Map) = match model {
        TailModel::Power => (Box::new(|v| v), Box::new(|v| v)),
        TailModel::Capacitary { p } => {
            let e = -1.0 / (p - 1.0);
            (Box::new(move |v: f64| v.max(1e-300).powf(e)), Box::new(move |v: f64| v.max(1e-300).powf(1.0 / e)))
        }
    };
    let x: Vec<f64> = n_values.iter().map(|n| n.powf(-q)).collect();
    let y: Vec<f64> = phi.iter().map(|v| fwd(*v)).collect();
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let limit = inv(intercept);
    let residual = x.iter().zip(phi).map(|(xi, v)| (inv(intercept + slope * xi) - v).abs()).fold(0.0, f64::max) / limit.abs().max(1e-300);

    let l = phi.len();
    let free =
        extrapolate_triple([1.0 / n_values[l - 3], 1.0 / n_values[l - 2], 1.0 / n_values[l - 1]], [y[l - 3], y[l - 2], y[l - 1]]).ok();
    Ok(Extrapolation { limit, residual, rate: q, free_limit: free.map(|(v, _)| inv(v)), free_rate: free.and_then(|(_, r)| r) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::radial_capacity;
    use std::f64::consts::PI;

    #[test]
    fn synthetic_power_law_is_exact() {
        let n = [2.0, 4.0, 8.0];
        let phi = n.map(|x| 5.0 + 3.0 / x);
        let e = extrapolate(&n, &phi, 1.0, TailModel::Power).unwrap();
        assert!((e.limit - 5.0).abs() < 1e-12);
        assert!(e.residual < 1e-12);
    }

    #[test]
    fn constant_sequence() {
        let e = extrapolate(&[2.0, 4.0, 8.0], &[3.0, 3.0, 3.0], 1.0, TailModel::Power).unwrap();
        assert_eq!(e.limit, 3.0);
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn capacities_extrapolate_to_whole_space() {
        let n = [2.0, 4.0, 8.0];
        let phi = n.map(|r| radial_capacity(3, 2.0, 1.0, r).unwrap());
        let e = extrapolate(&n, &phi, 1.0, TailModel::Capacitary { p: 2.0 }).unwrap();
        assert!((e.limit - 4.0 * PI).abs() / (4.0 * PI) < 5e-3);
    }

    #[test]
    fn errors() {
        assert!(matches!(extrapolate(&[2.0, 4.0], &[1.0, 1.0], 1.0, TailModel::Power), Err(Error::TooFewPoints(2))));
        let e = extrapolate(&[2.0, 4.0, 8.0], &[1.0, 1.1, 1.0], 1.0, TailModel::Power).unwrap_err();
        assert!(e.to_string().contains("non-monotone truncation"));
    }
}
