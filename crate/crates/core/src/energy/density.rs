//! Stored-energy densities `W: R^{m×n} -> [0, ∞)` with p-growth.
//!
//! Matrices are passed as column-major flat slices of length `rows * cols`,
//! matching the storage order of [`nalgebra::DMatrix`].

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A density over `rows × cols` matrices, with an optional smoothing of
/// the norm-power terms by `reg`.
///
/// With `reg > 0` every term `|G|^q` is replaced by
/// `(|G|² + reg²)^{q/2} - reg^q`; `reg = 0` gives the exact value.
pub trait Density: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// Growth exponent p.
    fn exponent(&self) -> f64;
    fn value(&self, f: &[f64], reg: f64) -> f64;
    /// Writes `∂W_reg/∂F` into `out` (same layout as `f`).
    fn gradient(&self, f: &[f64], reg: f64, out: &mut [f64]);
    /// Local curvature scale of the density at `f`, used to build diagonal
    /// preconditioners.
    fn stiffness(&self, f: &[f64], reg: f64) -> f64 {
        let _ = (f, reg);
        2.0
    }
    /// True when `W(F diag(R, I)) = W(F)` for every rotation `R` acting on
    /// the first `lateral_cols` columns.
    fn lateral_isotropy(&self, lateral_cols: usize) -> bool {
        let _ = lateral_cols;
        false
    }
    fn is_convex(&self) -> bool {
        false
    }
}

/// How a norm-power term reads its argument.
#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    /// `|F|`
    Plain,
    /// `|F - A|`
    Shifted(Vec<f64>),
    /// `|F M|` with `M` an `n × cols` matrix (column-major).
    Right { matrix: Vec<f64>, cols: usize },
    /// `min(|F - A|, |F + A|)`
    Wells(Vec<f64>),
}

/// `coefficient · |form(F)|^exponent`
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: f64,
    pub exponent: f64,
    pub form: Form,
}

pub type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A user-supplied density given by value only. Gradients are taken by
/// central differences.
#[derive(Clone)]
pub struct Custom {
    pub name: String,
    pub func: CustomFn,
    pub convex: bool,
    pub isotropic: bool,
}

impl fmt::Debug for Custom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Custom").field("name", &self.name).finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KindLabel {
    Power,
    Anisotropic,
    Shifted,
    DoubleWell,
    Sum,
    Custom,
}

/// A validated stored-energy density.
#[derive(Clone, Debug)]
pub struct EnergyDensity {
    m: usize,
    n: usize,
    p: f64,
    beta: f64,
    reg_eps: f64,
    label: KindLabel,
    terms: Vec<Term>,
    custom: Option<Custom>,
}

fn check_dims(m: usize, n: usize, p: f64) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDensity(format!("dimensions must be positive, got {m}×{n}")));
    }
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidDensity(format!("growth exponent must exceed 1, got {p}")));
    }
    Ok(())
}

fn frob(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn spectral_norm(matrix: &[f64], rows: usize, cols: usize) -> f64 {
    let m = DMatrix::from_column_slice(rows, cols, matrix);
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

impl EnergyDensity {
    /// `|F|^p`
    pub fn power(m: usize, n: usize, p: f64) -> Result<Self> {
        check_dims(m, n, p)?;
        Ok(Self {
            m,
            n,
            p,
            beta: 1.0,
            reg_eps: 0.0,
            label: KindLabel::Power,
            terms: vec![Term { coefficient: 1.0, exponent: p, form: Form::Plain }],
            custom: None,
        })
    }

    /// `|F M|^p` with `M` an `n × k` matrix given column-major.
    pub fn anisotropic(m: usize, n: usize, p: f64, matrix: &DMatrix<f64>) -> Result<Self> {
        check_dims(m, n, p)?;
        if matrix.nrows() != n {
            return Err(Error::Shape { expected_rows: n, expected_cols: matrix.ncols(), rows: matrix.nrows(), cols: matrix.ncols() });
        }
        let norm = spectral_norm(matrix.as_slice(), n, matrix.ncols());
        Ok(Self {
            m,
            n,
            p,
            beta: norm.powf(p).max(1.0),
            reg_eps: 0.0,
            label: KindLabel::Anisotropic,
            terms: vec![Term {
                coefficient: 1.0,
                exponent: p,
                form: Form::Right { matrix: matrix.as_slice().to_vec(), cols: matrix.ncols() },
            }],
            custom: None,
        })
    }

    /// `|F - A|^p`
    pub fn shifted(p: f64, shift: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = shift.shape();
        check_dims(m, n, p)?;
        let a = frob(shift.as_slice());
        Ok(Self {
            m,
            n,
            p,
            beta: 2f64.powf(p - 1.0) * a.powf(p).max(1.0),
            reg_eps: 0.0,
            label: KindLabel::Shifted,
            terms: vec![Term { coefficient: 1.0, exponent: p, form: Form::Shifted(shift.as_slice().to_vec()) }],
            custom: None,
        })
    }

    /// `min(|F - A|^p, |F + A|^p)`
    pub fn double_well(p: f64, well: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = well.shape();
        check_dims(m, n, p)?;
        let a = frob(well.as_slice());
        Ok(Self {
            m,
            n,
            p,
            beta: 2f64.powf(p - 1.0) * a.powf(p).max(1.0),
            reg_eps: 0.0,
            label: KindLabel::DoubleWell,
            terms: vec![Term { coefficient: 1.0, exponent: p, form: Form::Wells(well.as_slice().to_vec()) }],
            custom: None,
        })
    }

    /// A sum of norm-power terms. Every exponent must lie in `(0, p]` and
    /// every coefficient must be positive.
    pub fn sum(m: usize, n: usize, p: f64, terms: Vec<Term>) -> Result<Self> {
        check_dims(m, n, p)?;
        if terms.is_empty() {
            return Err(Error::InvalidDensity("a sum needs at least one term".into()));
        }
        let mut beta = 0.0;
        for t in &terms {
            if !(t.exponent > 0.0) || t.exponent > p + 1e-12 {
                return Err(Error::InvalidDensity(format!("term exponent {} outside (0, {p}]", t.exponent)));
            }
            if !(t.coefficient > 0.0) {
                return Err(Error::InvalidDensity(format!("term coefficient {} must be positive", t.coefficient)));
            }
            let len = m * n;
            let scale = match &t.form {
                Form::Plain => 1.0,
                Form::Shifted(a) | Form::Wells(a) => {
                    if a.len() != len {
                        return Err(Error::InvalidDensity("shift size does not match m×n".into()));
                    }
                    2f64.powf((t.exponent - 1.0).max(0.0)) * frob(a).powf(t.exponent).max(1.0)
                }
                Form::Right { matrix, cols } => {
                    if matrix.len() != n * cols {
                        return Err(Error::InvalidDensity("right factor must have n rows".into()));
                    }
                    spectral_norm(matrix, n, *cols).powf(t.exponent).max(1.0)
                }
            };
            let lower = if t.exponent < p - 1e-12 { 2.0 } else { 1.0 };
            beta += t.coefficient * scale * lower;
        }
        Ok(Self { m, n, p, beta: f64::max(beta, 1.0), reg_eps: 0.0, label: KindLabel::Sum, terms, custom: None })
    }

    /// A density given by a closure.
    pub fn custom(name: &str, m: usize, n: usize, p: f64, func: CustomFn) -> Result<Self> {
        check_dims(m, n, p)?;
        Ok(Self {
            m,
            n,
            p,
            beta: 1.0,
            reg_eps: 0.0,
            label: KindLabel::Custom,
            terms: Vec::new(),
            custom: Some(Custom { name: name.to_string(), func, convex: false, isotropic: false }),
        })
    }

    /// Declares convexity and lateral isotropy of a custom density.
    pub fn with_custom_traits(mut self, convex: bool, isotropic: bool) -> Self {
        if let Some(c) = self.custom.as_mut() {
            c.convex = convex;
            c.isotropic = isotropic;
        }
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        if !(beta >= 1.0) || !beta.is_finite() {
            return Err(Error::InvalidDensity(format!("beta must be at least 1, got {beta}")));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_reg_eps(mut self, reg_eps: f64) -> Result<Self> {
        if !(reg_eps >= 0.0) || !reg_eps.is_finite() {
            return Err(Error::InvalidDensity(format!("regularization must be non-negative, got {reg_eps}")));
        }
        self.reg_eps = reg_eps;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn reg_eps(&self) -> f64 {
        self.reg_eps
    }
    pub fn label(&self) -> &KindLabel {
        &self.label
    }
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
    pub fn custom_part(&self) -> Option<&Custom> {
        self.custom.as_ref()
    }

    fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if rows != self.m || cols != self.n {
            return Err(Error::Shape { expected_rows: self.m, expected_cols: self.n, rows, cols });
        }
        Ok(())
    }

    /// Exact value `W(F)`.
    pub fn eval(&self, f: &DMatrix<f64>) -> Result<f64> {
        self.check_shape(f.nrows(), f.ncols())?;
        Ok(self.value(f.as_slice(), 0.0))
    }

    /// Value of the density regularized with `reg`.
    pub fn eval_regularized(&self, f: &DMatrix<f64>, reg: f64) -> Result<f64> {
        self.check_shape(f.nrows(), f.ncols())?;
        Ok(self.value(f.as_slice(), reg))
    }

    /// `∂W_reg/∂F` at the density's own regularization.
    pub fn gradient_at(&self, f: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_shape(f.nrows(), f.ncols())?;
        if self.reg_eps == 0.0 && self.at_kink(f.as_slice()) {
            return Err(Error::NonDifferentiable { exponent: self.p });
        }
        let mut out = vec![0.0; self.m * self.n];
        self.gradient(f.as_slice(), self.reg_eps, &mut out);
        Ok(DMatrix::from_column_slice(self.m, self.n, &out))
    }

    fn at_kink(&self, f: &[f64]) -> bool {
        self.terms.iter().any(|t| t.exponent < 2.0 && self.term_norm2(t, f).0 == 0.0)
    }

    /// The p-homogeneous part of the density: the pointwise limit of
    /// `r^p W(F / r)` as `r -> 0` for the shipped kinds. `None` for custom
    /// densities.
    pub fn homogeneous_limit(&self) -> Option<EnergyDensity> {
        if self.custom.is_some() {
            return None;
        }
        let kept: Vec<Term> = self
            .terms
            .iter()
            .filter(|t| (t.exponent - self.p).abs() <= 1e-12)
            .map(|t| Term {
                coefficient: t.coefficient,
                exponent: self.p,
                form: match &t.form {
                    Form::Plain | Form::Shifted(_) | Form::Wells(_) => Form::Plain,
                    Form::Right { matrix, cols } => Form::Right { matrix: matrix.clone(), cols: *cols },
                },
            })
            .collect();
        if kept.is_empty() {
            return None;
        }
        let label = if kept.len() == 1 {
            match kept[0].form {
                Form::Plain if kept[0].coefficient == 1.0 => KindLabel::Power,
                Form::Right { .. } if kept[0].coefficient == 1.0 => KindLabel::Anisotropic,
                _ => KindLabel::Sum,
            }
        } else {
            KindLabel::Sum
        };
        let mut g = EnergyDensity::sum(self.m, self.n, self.p, kept).ok()?;
        g.label = label;
        g.reg_eps = self.reg_eps;
        Some(g)
    }

    /// True when `W(λF) = λ^p W(F)` for all `λ > 0`.
    pub fn is_p_homogeneous(&self) -> bool {
        self.custom.is_none()
            && self.terms.iter().all(|t| (t.exponent - self.p).abs() <= 1e-12 && matches!(t.form, Form::Plain | Form::Right { .. }))
    }

    /// Squared norm of the term argument and, for wells, the sign of the
    /// active branch (+1 means `F - A`).
    fn term_norm2(&self, t: &Term, f: &[f64]) -> (f64, f64) {
        match &t.form {
            Form::Plain => (f.iter().map(|x| x * x).sum(), 0.0),
            Form::Shifted(a) => (f.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum(), 0.0),
            Form::Wells(a) => {
                let minus: f64 = f.iter().zip(a).map(|(x, y)| (x - y) * (x - y)).sum();
                let plus: f64 = f.iter().zip(a).map(|(x, y)| (x + y) * (x + y)).sum();
                if minus <= plus {
                    (minus, 1.0)
                } else {
                    (plus, -1.0)
                }
            }
            Form::Right { matrix, cols } => {
                let (m, n) = (self.m, self.n);
                let mut acc = 0.0;
                for c in 0..*cols {
                    for i in 0..m {
                        let mut g = 0.0;
                        for k in 0..n {
                            g += f[k * m + i] * matrix[c * n + k];
                        }
                        acc += g * g;
                    }
                }
                (acc, 0.0)
            }
        }
    }

    fn custom_gradient(&self, c: &Custom, f: &[f64], out: &mut [f64]) {
        let mut x = f.to_vec();
        for i in 0..f.len() {
            let h = 1e-6 * (1.0 + f[i].abs());
            x[i] = f[i] + h;
            let up = (c.func)(&x);
            x[i] = f[i] - h;
            let dn = (c.func)(&x);
            x[i] = f[i];
            out[i] = (up - dn) / (2.0 * h);
        }
    }
}

fn reg_power(norm2: f64, q: f64, reg: f64) -> f64 {
    if reg > 0.0 {
        (norm2 + reg * reg).powf(0.5 * q) - reg.powf(q)
    } else {
        norm2.powf(0.5 * q)
    }
}

/// `d/dG` of `reg_power` divided by `G`.
fn reg_power_slope(norm2: f64, q: f64, reg: f64) -> f64 {
    let s = norm2 + reg * reg;
    if s == 0.0 {
        // G = 0, so the contribution vanishes whatever the slope
        return 0.0;
    }
    q * s.powf(0.5 * q - 1.0)
}

impl Density for EnergyDensity {
    fn rows(&self) -> usize {
        self.m
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn exponent(&self) -> f64 {
        self.p
    }

    fn value(&self, f: &[f64], reg: f64) -> f64 {
        if let Some(c) = &self.custom {
            return (c.func)(f);
        }
        self.terms.iter().map(|t| t.coefficient * reg_power(self.term_norm2(t, f).0, t.exponent, reg)).sum()
    }

    fn gradient(&self, f: &[f64], reg: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        if let Some(c) = &self.custom {
            self.custom_gradient(c, f, out);
            return;
        }
        let (m, n) = (self.m, self.n);
        for t in &self.terms {
            let (n2, sign) = self.term_norm2(t, f);
            let slope = t.coefficient * reg_power_slope(n2, t.exponent, reg);
            if slope == 0.0 {
                continue;
            }
            match &t.form {
                Form::Plain => {
                    for (o, x) in out.iter_mut().zip(f) {
                        *o += slope * x;
                    }
                }
                Form::Shifted(a) => {
                    for ((o, x), y) in out.iter_mut().zip(f).zip(a) {
                        *o += slope * (x - y);
                    }
                }
                Form::Wells(a) => {
                    for ((o, x), y) in out.iter_mut().zip(f).zip(a) {
                        *o += slope * (x - sign * y);
                    }
                }
                Form::Right { matrix, cols } => {
                    for c in 0..*cols {
                        for i in 0..m {
                            let mut g = 0.0;
                            for k in 0..n {
                                g += f[k * m + i] * matrix[c * n + k];
                            }
                            for k in 0..n {
                                out[k * m + i] += slope * g * matrix[c * n + k];
                            }
                        }
                    }
                }
            }
        }
    }

    fn stiffness(&self, f: &[f64], reg: f64) -> f64 {
        if self.custom.is_some() {
            return 2.0;
        }
        let mut s = 0.0;
        for t in &self.terms {
            let (n2, _) = self.term_norm2(t, f);
            let q = t.exponent;
            let base = (n2 + reg * reg).max(1e-24);
            let factor = match &t.form {
                Form::Right { matrix, .. } => matrix.iter().map(|x| x * x).sum::<f64>(),
                _ => 1.0,
            };
            s += t.coefficient * q * (q - 1.0).max(1.0) * base.powf(0.5 * q - 1.0) * factor;
        }
        s.min(1e12)
    }

    fn lateral_isotropy(&self, lateral_cols: usize) -> bool {
        if let Some(c) = &self.custom {
            return c.isotropic;
        }
        let (m, n) = (self.m, self.n);
        let lateral_zero = |a: &[f64]| (0..lateral_cols.min(n)).all(|k| (0..m).all(|i| a[k * m + i] == 0.0));
        self.terms.iter().all(|t| match &t.form {
            Form::Plain => true,
            Form::Shifted(a) | Form::Wells(a) => lateral_zero(a),
            Form::Right { matrix, cols } => {
                // M M^T must be a multiple of the identity on the lateral block
                // and must not couple lateral and remaining rows.
                let s = |a: usize, b: usize| (0..*cols).map(|c| matrix[c * n + a] * matrix[c * n + b]).sum::<f64>();
                let scale = s(0, 0);
                let tol = 1e-12 * scale.abs().max(1.0);
                for a in 0..n {
                    for b in 0..n {
                        let v = s(a, b);
                        let a_lat = a < lateral_cols;
                        let b_lat = b < lateral_cols;
                        if a_lat && b_lat {
                            let want = if a == b { scale } else { 0.0 };
                            if (v - want).abs() > tol {
                                return false;
                            }
                        } else if a_lat != b_lat && v.abs() > tol {
                            return false;
                        }
                    }
                }
                true
            }
        })
    }

    fn is_convex(&self) -> bool {
        if let Some(c) = &self.custom {
            return c.convex;
        }
        self.terms.iter().all(|t| t.exponent >= 1.0 && !matches!(t.form, Form::Wells(_)))
    }
}

/// Euclidean (Frobenius) norm of a matrix.
pub fn frobenius(f: &DMatrix<f64>) -> f64 {
    frob(f.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: usize, cols: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn power_zero_and_norm_two() {
        let w = EnergyDensity::power(2, 3, 1.5).unwrap();
        assert_eq!(w.eval(&DMatrix::zeros(2, 3)).unwrap(), 0.0);
        let f = mat(2, 3, &[2.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(w.eval(&f).unwrap(), 2f64.powf(1.5), epsilon = 1e-12);
        assert_relative_eq!(w.eval(&f).unwrap(), 2.828427, epsilon = 1e-6);
    }

    #[test]
    fn double_well_vanishes_at_well() {
        let a = mat(1, 2, &[1.0, 0.5]);
        let w = EnergyDensity::double_well(2.0, &a).unwrap();
        assert_eq!(w.eval(&a).unwrap(), 0.0);
        assert_eq!(w.eval(&(-&a)).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_names_shapes() {
        let w = EnergyDensity::power(2, 3, 2.0).unwrap();
        let err = w.eval(&DMatrix::zeros(3, 2)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2×3") && msg.contains("3×2"), "{msg}");
    }

    #[test]
    fn quadratic_gradient_is_two_f() {
        let w = EnergyDensity::power(2, 2, 2.0).unwrap();
        let f = mat(2, 2, &[0.3, -1.2, 2.0, 0.7]);
        let g = w.gradient_at(&f).unwrap();
        assert_relative_eq!(g, &f * 2.0, epsilon = 1e-14);
    }

    #[test]
    fn regularized_gradient_vanishes_at_zero() {
        let w = EnergyDensity::power(1, 3, 1.5).unwrap().with_reg_eps(1e-6).unwrap();
        let g = w.gradient_at(&DMatrix::zeros(1, 3)).unwrap();
        assert!(g.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn kink_without_regularization_is_an_error() {
        let w = EnergyDensity::power(1, 3, 1.5).unwrap();
        assert!(matches!(w.gradient_at(&DMatrix::zeros(1, 3)), Err(Error::NonDifferentiable { .. })));
        // away from the kink the exact gradient exists
        assert!(w.gradient_at(&mat(1, 3, &[1.0, 0.0, 0.0])).is_ok());
    }

    #[test]
    fn gradient_matches_central_differences_unit_norm() {
        let w = EnergyDensity::power(2, 3, 1.5).unwrap().with_reg_eps(1e-6).unwrap();
        let raw = [0.3, -0.4, 0.1, 0.5, -0.2, 0.6];
        let nrm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f = DMatrix::from_column_slice(2, 3, &raw.map(|x| x / nrm));
        let g = w.gradient_at(&f).unwrap();
        let h = 1e-5;
        for i in 0..6 {
            let mut up = f.clone();
            up[i] += h;
            let mut dn = f.clone();
            dn[i] -= h;
            let fd = (w.eval_regularized(&up, 1e-6).unwrap() - w.eval_regularized(&dn, 1e-6).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1e-3), "entry {i}: fd {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn anisotropic_lateral_isotropy() {
        let iso = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 2.0, 3.0]));
        let w = EnergyDensity::anisotropic(1, 3, 2.0, &iso).unwrap();
        assert!(w.lateral_isotropy(2));
        let skew = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let w = EnergyDensity::anisotropic(1, 3, 2.0, &skew).unwrap();
        assert!(!w.lateral_isotropy(2));
    }

    #[test]
    fn homogeneous_limit_drops_lower_order_terms() {
        let w = EnergyDensity::sum(
            1,
            3,
            1.5,
            vec![Term { coefficient: 1.0, exponent: 1.5, form: Form::Plain }, Term { coefficient: 1.0, exponent: 0.75, form: Form::Plain }],
        )
        .unwrap();
        assert!(!w.is_p_homogeneous());
        let g = w.homogeneous_limit().unwrap();
        assert!(g.is_p_homogeneous());
        let f = mat(1, 3, &[0.2, 1.0, -0.4]);
        assert_relative_eq!(g.eval(&f).unwrap(), frobenius(&f).powf(1.5), epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_exponent() {
        assert!(EnergyDensity::power(1, 3, 1.0).is_err());
        assert!(EnergyDensity::power(1, 3, f64::NAN).is_err());
    }
}
