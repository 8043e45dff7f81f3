//! Metric families and pointwise Minkowski-norm operations.
//!
//! A [`MetricSpec`] is the single description of `F(x, y)`. Its
//! [`MetricSpec::norm`] is generic over [`Real`], so the same code yields
//! values, the fundamental tensor and all derivatives used downstream.

mod admissibility;
mod constants;
mod legendre;
mod volume;

pub use admissibility::{validate_alpha_beta, validate_fourth_root, AdmissibilityReport};
pub use constants::{reversibility, uniformity, Region, ReversibilityReport, SampleBudget, UniformityReport};
pub use legendre::{
    dual_norm, dual_norm_fast, gradient, legendre, legendre_inverse, legendre_inverse_generic,
    DualNormReport,
};
pub use volume::{bh_density, BhDensity};
pub(crate) use volume::bh_density_quadrature;
pub(crate) use constants::sphere_directions;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::real::{Dual, Real};

/// Riemannian metric matrices `G(x)` on a single chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiemannianModel {
    /// Constant symmetric positive-definite matrix.
    Constant { matrix: Vec<Vec<f64>> },
    /// Unit round sphere in stereographic coordinates, `4/(1+|x|²)² δ`.
    Sphere,
    /// Poincaré ball model of curvature `-1`, `4/(1-|x|²)² δ`.
    Hyperbolic,
    /// Diagonal metric `G_ii = exp(2 Σ_k rates[i][k] x^k)`.
    ExpDiagonal { rates: Vec<Vec<f64>> },
}

impl RiemannianModel {
    pub fn matrix<T: Real>(&self, x: &[T]) -> Vec<T> {
        let n = x.len();
        let mut g = vec![T::zero(); n * n];
        match self {
            RiemannianModel::Constant { matrix } => {
                for i in 0..n {
                    for j in 0..n {
                        g[i * n + j] = T::cst(matrix[i][j]);
                    }
                }
            }
            RiemannianModel::Sphere | RiemannianModel::Hyperbolic => {
                let r2 = linalg::dot(x, x);
                let den = if matches!(self, RiemannianModel::Sphere) {
                    r2 + 1.0
                } else {
                    -r2 + 1.0
                };
                let c = (den * den).recip() * 4.0;
                for i in 0..n {
                    g[i * n + i] = c;
                }
            }
            RiemannianModel::ExpDiagonal { rates } => {
                for i in 0..n {
                    let mut s = T::zero();
                    for (k, xk) in x.iter().enumerate() {
                        s += *xk * rates[i][k];
                    }
                    g[i * n + i] = (s * 2.0).exp();
                }
            }
        }
        g
    }
}

/// Tagged description of a Finsler metric on one chart of `ℝⁿ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricSpec {
    Euclidean {
        dim: usize,
    },
    Riemannian {
        dim: usize,
        model: RiemannianModel,
    },
    /// Funk metric of the unit ball.
    Funk {
        dim: usize,
    },
    /// `|y| + ⟨b, y⟩` with a constant one-form, `|b| < 1`.
    Randers {
        b: Vec<f64>,
    },
    /// `|y| φ(⟨β, y⟩/|y|)` with `φ` given by polynomial coefficients in `s`
    /// (lowest degree first) and the admissibility bound `b0 > |β|`.
    AlphaBeta {
        phi: Vec<f64>,
        beta: Vec<f64>,
        b0: f64,
    },
    /// `(a_ijkl yⁱ yʲ yᵏ yˡ)^{1/4}`, coefficients row-major of length `n⁴`.
    FourthRoot {
        dim: usize,
        coeffs: Vec<f64>,
    },
    /// `F(x, -y)` of the inner metric.
    Reverse {
        inner: Box<MetricSpec>,
    },
}

pub(crate) fn poly<T: Real>(c: &[f64], s: T) -> T {
    let mut acc = T::zero();
    for &a in c.iter().rev() {
        acc = acc * s + a;
    }
    acc
}

pub(crate) fn poly_derivative(c: &[f64]) -> Vec<f64> {
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, &a)| a * k as f64)
        .collect()
}

impl MetricSpec {
    pub fn euclidean(dim: usize) -> Self {
        MetricSpec::Euclidean { dim }
    }

    pub fn funk(dim: usize) -> Self {
        MetricSpec::Funk { dim }
    }

    pub fn sphere(dim: usize) -> Self {
        MetricSpec::Riemannian {
            dim,
            model: RiemannianModel::Sphere,
        }
    }

    pub fn hyperbolic(dim: usize) -> Self {
        MetricSpec::Riemannian {
            dim,
            model: RiemannianModel::Hyperbolic,
        }
    }

    pub fn reverse(self) -> Self {
        match self {
            MetricSpec::Reverse { inner } => *inner,
            m => MetricSpec::Reverse { inner: Box::new(m) },
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MetricSpec::Euclidean { dim }
            | MetricSpec::Riemannian { dim, .. }
            | MetricSpec::Funk { dim }
            | MetricSpec::FourthRoot { dim, .. } => *dim,
            MetricSpec::Randers { b } => b.len(),
            MetricSpec::AlphaBeta { beta, .. } => beta.len(),
            MetricSpec::Reverse { inner } => inner.dim(),
        }
    }

    /// Metric with no `x` dependence.
    pub fn is_minkowski(&self) -> bool {
        match self {
            MetricSpec::Euclidean { .. }
            | MetricSpec::Randers { .. }
            | MetricSpec::AlphaBeta { .. }
            | MetricSpec::FourthRoot { .. } => true,
            MetricSpec::Riemannian { model, .. } => matches!(model, RiemannianModel::Constant { .. }),
            MetricSpec::Funk { .. } => false,
            MetricSpec::Reverse { inner } => inner.is_minkowski(),
        }
    }

    /// Quadratic in `y`.
    pub fn is_riemannian(&self) -> bool {
        match self {
            MetricSpec::Euclidean { .. } | MetricSpec::Riemannian { .. } => true,
            MetricSpec::AlphaBeta { phi, beta, .. } => {
                beta.iter().all(|b| *b == 0.0) || phi.iter().skip(1).all(|c| *c == 0.0)
            }
            MetricSpec::Randers { b } => b.iter().all(|v| *v == 0.0),
            MetricSpec::FourthRoot { .. } | MetricSpec::Funk { .. } => false,
            MetricSpec::Reverse { inner } => inner.is_riemannian(),
        }
    }

    /// Structurally symmetric in `y`.
    pub fn is_reversible(&self) -> bool {
        match self {
            MetricSpec::Euclidean { .. } | MetricSpec::Riemannian { .. } => true,
            MetricSpec::FourthRoot { .. } => true,
            MetricSpec::Randers { b } => b.iter().all(|v| *v == 0.0),
            MetricSpec::AlphaBeta { phi, beta, .. } => {
                beta.iter().all(|b| *b == 0.0)
                    || phi.iter().skip(1).step_by(2).all(|c| *c == 0.0)
            }
            MetricSpec::Funk { .. } => false,
            MetricSpec::Reverse { inner } => inner.is_reversible(),
        }
    }

    pub fn in_chart(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            MetricSpec::Funk { .. }
            | MetricSpec::Riemannian {
                model: RiemannianModel::Hyperbolic,
                ..
            } => linalg::dot(x, x) < 1.0,
            MetricSpec::Reverse { inner } => inner.in_chart(x),
            _ => true,
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "point has {} coordinates, metric dimension is {}",
                x.len(),
                self.dim()
            )));
        }
        if !self.in_chart(x) {
            return Err(Error::Domain(format!("{x:?}")));
        }
        Ok(())
    }

    pub(crate) fn check_vector(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::Invalid(format!(
                "vector has {} components, metric dimension is {}",
                y.len(),
                self.dim()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite vector component".into()));
        }
        Ok(())
    }

    /// Cheap structural checks shared by every evaluation.
    pub fn check_structure(&self) -> Result<()> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::Invalid(format!("dimension {n} < 2")));
        }
        match self {
            MetricSpec::Riemannian { model, .. } => match model {
                RiemannianModel::Constant { matrix } => {
                    if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                        return Err(Error::Invalid("metric matrix must be n×n".into()));
                    }
                }
                RiemannianModel::ExpDiagonal { rates } => {
                    if rates.len() != n || rates.iter().any(|r| r.len() != n) {
                        return Err(Error::Invalid("rate matrix must be n×n".into()));
                    }
                }
                _ => {}
            },
            MetricSpec::Randers { b } => {
                if linalg::norm2(b) >= 1.0 {
                    return Err(Error::Inadmissible(format!(
                        "Randers one-form norm {} must be < 1",
                        linalg::norm2(b)
                    )));
                }
            }
            MetricSpec::AlphaBeta { phi, beta, b0 } => {
                if phi.is_empty() {
                    return Err(Error::Invalid("empty φ coefficients".into()));
                }
                if linalg::norm2(beta) >= *b0 {
                    return Err(Error::Inadmissible(format!(
                        "|β| = {} must be below b0 = {}",
                        linalg::norm2(beta),
                        b0
                    )));
                }
            }
            MetricSpec::FourthRoot { coeffs, .. } => {
                if coeffs.len() != n.pow(4) {
                    return Err(Error::Invalid(format!(
                        "fourth-root metric needs {} coefficients, got {}",
                        n.pow(4),
                        coeffs.len()
                    )));
                }
            }
            MetricSpec::Reverse { inner } => inner.check_structure()?,
            _ => {}
        }
        Ok(())
    }

    /// Full admissibility: structure plus the family's convexity predicate.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        match self {
            MetricSpec::Riemannian {
                model: RiemannianModel::Constant { matrix },
                ..
            } => {
                let n = self.dim();
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                for i in 0..n {
                    for j in 0..n {
                        if (flat[i * n + j] - flat[j * n + i]).abs() > 1e-12 {
                            return Err(Error::Inadmissible("metric matrix not symmetric".into()));
                        }
                    }
                }
                linalg::cholesky(&flat, n)?;
            }
            MetricSpec::AlphaBeta { phi, b0, .. } => {
                validate_alpha_beta(phi, *b0)?;
            }
            MetricSpec::FourthRoot { dim, coeffs } => {
                validate_fourth_root(coeffs, *dim)?;
            }
            MetricSpec::Reverse { inner } => inner.validate()?,
            _ => {}
        }
        Ok(())
    }

    /// `F(x, y)` on any scalar type. No chart or zero-vector handling.
    pub fn norm<T: Real>(&self, x: &[T], y: &[T]) -> T {
        let s = extreme_scale(y.iter().map(|v| v.value()));
        if s != 1.0 {
            let y: Vec<T> = y.iter().map(|v| *v * (1.0 / s)).collect();
            return self.norm(x, &y) * s;
        }
        match self {
            MetricSpec::Euclidean { .. } => linalg::dot(y, y).sqrt(),
            MetricSpec::Riemannian { model, .. } => {
                let g = model.matrix(x);
                linalg::bilinear(&g, y.len(), y, y).sqrt()
            }
            MetricSpec::Funk { .. } => {
                let xx = linalg::dot(x, x);
                let yy = linalg::dot(y, y);
                let xy = linalg::dot(x, y);
                let disc = yy - (xx * yy - xy * xy);
                (disc.sqrt() + xy) / (-xx + 1.0)
            }
            MetricSpec::Randers { b } => {
                let mut by = T::zero();
                for (bi, yi) in b.iter().zip(y) {
                    by += *yi * *bi;
                }
                linalg::dot(y, y).sqrt() + by
            }
            MetricSpec::AlphaBeta { phi, beta, .. } => {
                let a = linalg::dot(y, y).sqrt();
                let mut by = T::zero();
                for (bi, yi) in beta.iter().zip(y) {
                    by += *yi * *bi;
                }
                a * poly(phi, by / a)
            }
            MetricSpec::FourthRoot { dim, coeffs } => quartic(coeffs, *dim, y).sqrt().sqrt(),
            MetricSpec::Reverse { inner } => {
                let my: Vec<T> = y.iter().map(|v| -*v).collect();
                inner.norm(x, &my)
            }
        }
    }

    /// `F(x, y)`, validated against the chart; zero for `y = 0`.
    pub fn eval_f(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_structure()?;
        self.check_point(x)?;
        self.check_vector(y)?;
        if y.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let f = self.norm(x, y);
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::Inadmissible(format!(
                "F(x, y) = {f} at x = {x:?}, y = {y:?}"
            )));
        }
        Ok(f)
    }

    /// Closed-form dual norm where the family admits one.
    pub fn dual_norm_closed(&self, x: &[f64], xi: &[f64]) -> Option<f64> {
        let s = extreme_scale(xi.iter().copied());
        if s != 1.0 {
            let xi: Vec<f64> = xi.iter().map(|v| v / s).collect();
            return self.dual_norm_closed(x, &xi).map(|v| v * s);
        }
        let n = xi.len();
        match self {
            MetricSpec::Euclidean { .. } => Some(linalg::norm2(xi)),
            MetricSpec::Riemannian { model, .. } => {
                let g = model.matrix(x);
                let sol = linalg::spd_solve(&g, n, xi).ok()?;
                Some(linalg::dot(xi, &sol).max(0.0).sqrt())
            }
            // Indicatrix at x is the unit sphere translated by -x.
            MetricSpec::Funk { .. } => Some(linalg::norm2(xi) - linalg::dot(x, xi)),
            MetricSpec::Randers { b } => {
                let bb = linalg::dot(b, b);
                let bx = linalg::dot(b, xi);
                let xx = linalg::dot(xi, xi);
                Some((((1.0 - bb) * xx + bx * bx).sqrt() - bx) / (1.0 - bb))
            }
            MetricSpec::Reverse { inner } => {
                let m: Vec<f64> = xi.iter().map(|v| -v).collect();
                inner.dual_norm_closed(x, &m)
            }
            _ => None,
        }
    }

    /// `[½F²]_{yⁱ}` at `(x, y)` on any scalar type.
    pub fn legendre_generic<T: Real>(&self, x: &[T], y: &[T]) -> Vec<T> {
        let n = y.len();
        let xs: Vec<Dual<T>> = crate::real::lift(x);
        (0..n)
            .map(|i| {
                let ys: Vec<Dual<T>> = y
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| Dual::new(v, if k == i { T::one() } else { T::zero() }))
                    .collect();
                let f = self.norm(&xs, &ys);
                (f * f * 0.5).du
            })
            .collect()
    }

    /// Fundamental tensor `[½F²]_{yⁱyʲ}` on any scalar type, row-major.
    pub fn fundamental_matrix<T: Real>(&self, x: &[T], y: &[T]) -> Vec<T> {
        let n = y.len();
        let xs: Vec<Dual<Dual<T>>> = x.iter().map(|&v| Dual::constant(Dual::constant(v))).collect();
        let mut g = vec![T::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let ys: Vec<Dual<Dual<T>>> = y
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let a = if k == i { T::one() } else { T::zero() };
                        let b = if k == j { T::one() } else { T::zero() };
                        Dual::new(Dual::new(v, a), Dual::new(b, T::zero()))
                    })
                    .collect();
                let f = self.norm(&xs, &ys);
                let h = (f * f * 0.5).du.du;
                g[i * n + j] = h;
                g[j * n + i] = h;
            }
        }
        g
    }

    /// Fundamental tensor with degenerate-input and definiteness checks.
    pub fn fundamental_tensor(&self, x: &[f64], y: &[f64]) -> Result<FundamentalTensor> {
        self.check_structure()?;
        self.check_point(x)?;
        self.check_vector(y)?;
        if y.iter().all(|v| *v == 0.0) {
            return Err(Error::Degenerate("fundamental tensor at y = 0".into()));
        }
        let n = y.len();
        let g = self.fundamental_matrix(x, y);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Inadmissible(format!("non-finite g at x = {x:?}, y = {y:?}")));
        }
        linalg::cholesky(&g, n)?;
        Ok(FundamentalTensor {
            dim: n,
            base: x.to_vec(),
            direction: y.to_vec(),
            matrix: g,
        })
    }
}

/// Power of two bringing `max |vᵢ|` near 1 when squaring it would under- or
/// overflow; `1` otherwise, so ordinary inputs are evaluated unchanged.
fn extreme_scale(v: impl Iterator<Item = f64>) -> f64 {
    let m = v.fold(0.0f64, |m, a| m.max(a.abs()));
    if m == 0.0 || !m.is_finite() || (1e-100..=1e100).contains(&m) {
        return 1.0;
    }
    // clamped so that both the scale and its reciprocal stay normal
    2f64.powi((m.log2().round() as i32).clamp(-1020, 1020))
}

fn quartic<T: Real>(a: &[f64], n: usize, y: &[T]) -> T {
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            let yij = y[i] * y[j];
            for k in 0..n {
                let yijk = yij * y[k];
                for l in 0..n {
                    let c = a[((i * n + j) * n + k) * n + l];
                    if c != 0.0 {
                        s += yijk * y[l] * c;
                    }
                }
            }
        }
    }
    s
}


/// `g_ij(x, y)` together with its base point and direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FundamentalTensor {
    pub dim: usize,
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    /// Row-major `n×n`.
    pub matrix: Vec<f64>,
}

impl FundamentalTensor {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.dim + j]
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        linalg::bilinear(&self.matrix, self.dim, u, v)
    }

    pub fn det(&self) -> f64 {
        linalg::det(&self.matrix, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn funk_spot_values() {
        let f = MetricSpec::funk(2);
        assert!((f.eval_f(&[0.0, 0.0], &[0.6, 0.8]).unwrap() - 1.0).abs() < 1e-15);
        assert!((f.eval_f(&[0.5, 0.0], &[1.0, 0.0]).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(f.eval_f(&[1.0, 0.0], &[1.0, 0.0]), Err(Error::Domain(_))));
        assert_eq!(f.eval_f(&[0.2, 0.1], &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_norm_and_tensor() {
        let e = MetricSpec::euclidean(2);
        assert_eq!(e.eval_f(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let g = e.fundamental_tensor(&[0.3, -1.0], &[1.0, 2.0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g.get(i, j) - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn riemannian_tensor_is_the_metric_matrix() {
        let m = MetricSpec::Riemannian {
            dim: 2,
            model: RiemannianModel::ExpDiagonal {
                rates: vec![vec![0.3, -0.2], vec![0.1, 0.4]],
            },
        };
        let x = [0.4, -0.7];
        let gm = RiemannianModel::ExpDiagonal {
            rates: vec![vec![0.3, -0.2], vec![0.1, 0.4]],
        }
        .matrix(&x);
        for y in [[1.0, 0.0], [0.3, -2.0], [-1.0, 5.0]] {
            let g = m.fundamental_tensor(&x, &y).unwrap();
            for k in 0..4 {
                assert!((g.matrix[k] - gm[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_direction_refused() {
        let f = MetricSpec::funk(2);
        assert!(matches!(
            f.fundamental_tensor(&[0.1, 0.1], &[0.0, 0.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn structural_rejections() {
        assert!(MetricSpec::Randers { b: vec![0.8, 0.8] }.check_structure().is_err());
        assert!(MetricSpec::Euclidean { dim: 1 }.check_structure().is_err());
        let bad = MetricSpec::FourthRoot { dim: 2, coeffs: vec![1.0; 8] };
        assert!(matches!(bad.check_structure(), Err(Error::Invalid(_))));
    }

    #[test]
    fn reverse_reverses() {
        let f = MetricSpec::funk(2);
        let r = f.clone().reverse();
        let x = [0.3, -0.2];
        let y = [0.5, 0.1];
        let a = f.eval_f(&x, &[-0.5, -0.1]).unwrap();
        assert!((r.eval_f(&x, &y).unwrap() - a).abs() < 1e-15);
        assert_eq!(r.reverse(), f);
    }

    #[test]
    fn serde_tagging() {
        let m = MetricSpec::Reverse {
            inner: Box::new(MetricSpec::Randers { b: vec![0.1, 0.2] }),
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"family\":\"reverse\""));
        let back: MetricSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
