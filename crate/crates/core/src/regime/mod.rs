//! Scaling regimes, the limit functional, direct film energies and the
//! Γ-trend experiment.

mod film;
mod limit;
mod poincare;

use serde::{Deserialize, Serialize};

pub use film::{build_film, build_film_cell, direct_film_energy, gamma_trend, FilmCell, FilmSpec, TrendOptions, TrendReport, TrendRow};
pub use limit::{assemble_limit, GridField, PhiTable, PlanarGrid};
pub use poincare::{poincare_check, PoincareReport, PoincareRow, Profile, Shape};

use crate::error::{Error, Result};

/// A positive sequence indexed by `j = 1, 2, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "form")]
pub enum Sequence {
    /// `coef · base^{exponent · j}`
    Exponent {
        #[serde(default = "one")]
        coef: f64,
        base: f64,
        exponent: f64,
    },
    List {
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

impl Sequence {
    /// `base^{exponent · j}`
    pub fn power(base: f64, exponent: f64) -> Self {
        Sequence::Exponent { coef: 1.0, base, exponent }
    }

    pub fn value(&self, j: usize) -> f64 {
        match self {
            Sequence::Exponent { coef, base, exponent } => coef * base.powf(exponent * j as f64),
            Sequence::List { values } => values[j - 1],
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Sequence::Exponent { coef, base, exponent } => {
                if !(*coef > 0.0 && *base > 0.0 && coef.is_finite() && base.is_finite() && exponent.is_finite()) {
                    return Err(Error::Sequences(format!("{name}: coefficient and base must be positive")));
                }
                if !(exponent * base.ln() < 0.0) {
                    return Err(Error::Sequences(format!("{name} does not tend to 0")));
                }
            }
            Sequence::List { values } => {
                if values.len() < 3 || values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                    return Err(Error::Sequences(format!("{name}: lists need at least 3 positive entries")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeSequences {
    pub eps: Sequence,
    pub delta: Sequence,
    pub r: Sequence,
    pub n: usize,
    pub p: f64,
}

/// Limit of a positive sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitValue {
    Zero,
    Finite(f64),
    Infinite,
}

impl LimitValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            LimitValue::Zero => 0.0,
            LimitValue::Finite(v) => *v,
            LimitValue::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeLabel {
    Infinite,
    Finite,
    Zero,
    /// `R = 0`: the layers decouple in the limit.
    TrivialDecoupled,
    /// `R = ∞`: the layers are glued in the limit.
    TrivialGlued,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub ell: LimitValue,
    /// `lim r^{n-1-p} / ε^{n-1}`
    pub r_ell: LimitValue,
    /// `lim r^{n-p} / (δ ε^{n-1})`
    pub r_zero: LimitValue,
    pub label: RegimeLabel,
    /// `|R^(0) - ℓ R^(ℓ)| / (ℓ R^(ℓ))` for finite positive `ℓ`.
    pub consistency: Option<f64>,
}

impl RegimeReport {
    /// The coefficient multiplying the interfacial term.
    pub fn coefficient(&self) -> LimitValue {
        match self.ell {
            LimitValue::Zero => self.r_zero,
            _ => self.r_ell,
        }
    }
}

/// Products `Π x_k^{e_k}` of the three sequences.
struct Monomial {
    eps: f64,
    delta: f64,
    r: f64,
}

const RATE_TOL: f64 = 1e-9;

fn limit_exponent(seq: &RegimeSequences, mono: &Monomial) -> LimitValue {
    // log x_j = log c + j λ, so the monomial has rate Σ e_k λ_k
    let parts = [(&seq.eps, mono.eps), (&seq.delta, mono.delta), (&seq.r, mono.r)];
    let mut rate = 0.0;
    let mut scale = 0.0f64;
    let mut log_coef = 0.0;
    for (s, e) in parts {
        if let Sequence::Exponent { coef, base, exponent } = s {
            let lam = exponent * base.ln();
            rate += e * lam;
            scale = scale.max((e * lam).abs());
            log_coef += e * coef.ln();
        }
    }
    if rate > RATE_TOL * scale.max(1.0) {
        LimitValue::Infinite
    } else if rate < -RATE_TOL * scale.max(1.0) {
        LimitValue::Zero
    } else {
        LimitValue::Finite(log_coef.exp())
    }
}

/// Limit of a list from its last three terms: geometric trends decide
/// `0`/`∞`, otherwise Aitken's Δ².
fn limit_list(x: &[f64]) -> Result<LimitValue> {
    let l = x.len();
    let (a, b, c) = (x[l - 3], x[l - 2], x[l - 1]);
    let (g1, g2) = ((b / a).ln(), (c / b).ln());
    if g1 * g2 < 0.0 && g2.abs() >= 0.5 * g1.abs() {
        return Err(Error::EllUndefined);
    }
    let tol = 1e-3;
    if g1 < -tol && g2 < -tol && g2 <= 0.5 * g1 + tol {
        return Ok(LimitValue::Zero);
    }
    if g1 > tol && g2 > tol && g2 >= 0.5 * g1 - tol {
        return Ok(LimitValue::Infinite);
    }
    let den = c - 2.0 * b + a;
    let lim = if den.abs() <= 1e-14 * c.abs() { c } else { c - (c - b).powi(2) / den };
    if !(lim.is_finite() && lim > 0.0) {
        return Err(Error::EllUndefined);
    }
    Ok(LimitValue::Finite(lim))
}

fn limit_of(seq: &RegimeSequences, mono: Monomial) -> Result<LimitValue> {
    let lists = [&seq.eps, &seq.delta, &seq.r].iter().any(|s| matches!(s, Sequence::List { .. }));
    if !lists {
        return Ok(limit_exponent(seq, &mono));
    }
    let len = [&seq.eps, &seq.delta, &seq.r]
        .iter()
        .filter_map(|s| match s {
            Sequence::List { values } => Some(values.len()),
            _ => None,
        })
        .min()
        .unwrap();
    let vals: Vec<f64> =
        (1..=len).map(|j| seq.eps.value(j).powf(mono.eps) * seq.delta.value(j).powf(mono.delta) * seq.r.value(j).powf(mono.r)).collect();
    limit_list(&vals)
}

/// Reads `ℓ`, `R^(ℓ)` and `R^(0)` off the sequences.
pub fn classify(seq: &RegimeSequences) -> Result<RegimeReport> {
    let (n, p) = (seq.n as f64, seq.p);
    if seq.n < 3 || !(p > 1.0 && p < n - 1.0) {
        return Err(Error::Sequences(format!("need n >= 3 and 1 < p < n-1, got n = {}, p = {p}", seq.n)));
    }
    seq.eps.validate("eps")?;
    seq.delta.validate("delta")?;
    seq.r.validate("r")?;
    let thin = limit_of(seq, Monomial { eps: -1.0, delta: 1.0, r: 0.0 });
    if !matches!(thin, Ok(LimitValue::Zero)) {
        return Err(Error::NotThinFilm);
    }
    if !matches!(limit_of(seq, Monomial { eps: -1.0, delta: 0.0, r: 1.0 })?, LimitValue::Zero) {
        return Err(Error::Sequences("r/eps must tend to 0".into()));
    }
    let ell = limit_of(seq, Monomial { eps: 0.0, delta: -1.0, r: 1.0 })?;
    let r_ell = limit_of(seq, Monomial { eps: 1.0 - n, delta: 0.0, r: n - 1.0 - p })?;
    let r_zero = limit_of(seq, Monomial { eps: 1.0 - n, delta: -1.0, r: n - p })?;
    let coef = match ell {
        LimitValue::Zero => r_zero,
        _ => r_ell,
    };
    let label = match coef {
        LimitValue::Zero => RegimeLabel::TrivialDecoupled,
        LimitValue::Infinite => RegimeLabel::TrivialGlued,
        LimitValue::Finite(_) => match ell {
            LimitValue::Infinite => RegimeLabel::Infinite,
            LimitValue::Finite(_) => RegimeLabel::Finite,
            LimitValue::Zero => RegimeLabel::Zero,
        },
    };
    let consistency = match (ell, r_ell, r_zero) {
        (LimitValue::Finite(l), LimitValue::Finite(a), LimitValue::Finite(b)) => Some((b - l * a).abs() / (l * a)),
        _ => None,
    };
    Ok(RegimeReport { ell, r_ell, r_zero, label, consistency })
}
