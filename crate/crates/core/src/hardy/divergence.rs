//! Divergence against a measure, the p-Laplacian, and the divergence-theorem
//! inequality for certified pairs `(X, f_X)`.

use serde::{Deserialize, Serialize};

use super::families::{battery, BatteryRegion, TestFunction};
use super::quadrature::{integrate, Budget, Origin, RayEnd, RayPlan};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::measure::MeasureSpec;
use crate::metric::{dual_norm_fast, legendre_inverse_generic, MetricSpec};
use crate::models::{ModelSpace, Side};
use crate::real::{basis, seed, Dual, Real};

/// `div X = σ⁻¹ ∂ᵢ(σ Xⁱ)` with the partials taken by forward-mode AD.
pub fn divergence<F>(spec: &MetricSpec, measure: &MeasureSpec, x: &[f64], field: F) -> Result<f64>
where
    F: Fn(&[Dual<f64>]) -> Result<Vec<Dual<f64>>>,
{
    let n = x.len();
    let sigma = measure.density_at(spec, x)?;
    let mut total = 0.0;
    for k in 0..n {
        let xs = seed(x, &basis::<f64>(n, k));
        let s = measure.density(spec, &xs)?;
        let v = field(&xs)?;
        total += (s * v[k]).du;
    }
    Ok(total / sigma)
}

/// `Δ_p f = div(F^{p−2}(∇f) ∇f)`.
pub fn p_laplacian(spec: &MetricSpec, measure: &MeasureSpec, f: &ScalarField, x: &[f64], p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::Invalid(format!("p-Laplacian needs p > 1, got {p}")));
    }
    spec.check_point(x)?;
    let df = f.differential(x);
    if df.iter().all(|a| *a == 0.0) {
        return Err(Error::Domain(format!("critical point of f at {x:?}")));
    }
    let n = x.len();
    divergence(spec, measure, x, |xs: &[Dual<f64>]| {
        // df at the dual point, through one more nesting level
        let df: Vec<Dual<f64>> = (0..n)
            .map(|i| {
                let xx: Vec<Dual<Dual<f64>>> = xs
                    .iter()
                    .enumerate()
                    .map(|(j, v)| Dual::new(*v, if i == j { Dual::one() } else { Dual::zero() }))
                    .collect();
                f.eval(&xx).du
            })
            .collect();
        let grad = legendre_inverse_generic(spec, xs, &df)?;
        let w = spec.norm(xs, &grad).powf(p - 2.0);
        Ok(grad.into_iter().map(|g| g * w).collect())
    })
}

/// Radial pair `X = a·r^k·∇r`, `f_X = c·r^{k−1}` with `r = r₊`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergencePair {
    Radial { a: f64, k: f64, c: f64 },
}

impl DivergencePair {
    /// `X = −α r^{β+1} ∇r`, `f_X = c r^β`, `c = α[(α−1)(p−1) − β − 1]`.
    pub fn lemma(alpha: f64, beta: f64, p: f64) -> Self {
        DivergencePair::Radial {
            a: -alpha,
            k: beta + 1.0,
            c: alpha * ((alpha - 1.0) * (p - 1.0) - beta - 1.0),
        }
    }

    /// Analytic certificate of `0 < f_X ≤ div X`. On a Minkowski space with a
    /// constant density, `∇r₊ = x/r` and `div(a r^k ∇r) = a(k+n−1) r^{k−1}`.
    pub fn certify(&self, model: &ModelSpace) -> Result<f64> {
        let DivergencePair::Radial { a, k, c } = *self;
        if !matches!(model, ModelSpace::Euclidean { .. } | ModelSpace::Minkowski { .. }) {
            return Err(Error::Refused(format!(
                "no divergence certificate for the {} model",
                model.name()
            )));
        }
        let div = a * (k + model.dim() as f64 - 1.0);
        if !(c > 0.0) {
            return Err(Error::Refused(format!("f_X = {c}·r^(k-1) is not positive")));
        }
        if c > div {
            return Err(Error::Refused(format!("certificate fails: c = {c} > a(k+n-1) = {div}")));
        }
        Ok(div - c)
    }

    fn field<T: Real>(&self, model: &ModelSpace, x: &[T]) -> Vec<T> {
        let DivergencePair::Radial { a, k, .. } = *self;
        let r = model.radius(x, Side::Forward);
        let w = r.powf(k - 1.0) * a;
        x.iter().map(|v| *v * w).collect()
    }

    fn f_x(&self, r: f64) -> f64 {
        let DivergencePair::Radial { k, c, .. } = *self;
        c * r.powf(k - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceMember {
    pub label: String,
    /// `p^p ∫ F^p(−X)/f^{p−1} max F*^p(±du)`.
    pub lhs_minus: f64,
    /// `p^p ∫ F^p(X)/f^{p−1} max F*^p(±du)`.
    pub lhs_plus: f64,
    /// `∫ |u|^p f_X`.
    pub rhs: f64,
    /// `∫ u f_X` and `−∫ du(X)`, for nonnegative members.
    pub weak: Option<(f64, f64)>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub pair: DivergencePair,
    pub model: String,
    pub p: f64,
    /// `a(k+n−1) − c` from the certificate.
    pub certified_margin: f64,
    /// Smallest `div X − f_X` over the sample points, with `div X` by AD,
    /// relative to `f_X`.
    pub pointwise_margin: f64,
    pub members: Vec<DivergenceMember>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Both conclusions of the divergence inequality, and the weak form of
/// `f_X ≤ div X`, for every test function.
pub fn divergence_pair_check(
    model: &ModelSpace,
    pair: &DivergencePair,
    p: f64,
    functions: &[Box<dyn TestFunction>],
    domain: (f64, f64),
    budget: &Budget,
    tolerance: f64,
) -> Result<DivergenceReport> {
    if !(p > 1.0) {
        return Err(Error::Invalid(format!("p must exceed 1, got {p}")));
    }
    let certified_margin = pair.certify(model)?;
    let spec = model.metric();
    let measure = model.measure();
    let n = model.dim();
    let (inner, outer) = domain;
    if !(inner > 0.0 && inner < outer) {
        return Err(Error::Invalid(format!("annulus ({inner}, {outer}) must avoid the base point")));
    }

    let mut rng_dirs = {
        use rand::SeedableRng;
        rand_chacha::ChaCha8Rng::seed_from_u64(3)
    };
    let mut pointwise_margin = f64::INFINITY;
    for (j, u) in crate::metric::sphere_directions(n, 16, &mut rng_dirs).iter().enumerate() {
        let t = inner + (outer - inner) * (j as f64 + 0.5) / 16.0;
        let x: Vec<f64> = u.iter().map(|a| a * t).collect();
        let div = divergence(&spec, &measure, &x, |xs| Ok(pair.field(model, xs)))?;
        let f = pair.f_x(model.radius(&x, Side::Forward));
        pointwise_margin = pointwise_margin.min((div - f) / f);
    }

    let mut members = Vec::with_capacity(functions.len());
    for func in functions {
        let integrand = |x: &[f64]| -> Result<[f64; 5]> {
            let (u, du) = func.eval(x)?;
            if u == 0.0 && du.iter().all(|a| *a == 0.0) {
                return Ok([0.0; 5]);
            }
            let sigma = measure.density(&spec, x)?;
            let r = model.radius(x, Side::Forward);
            let fx = pair.f_x(r);
            let xf = pair.field(model, x);
            let minus: Vec<f64> = xf.iter().map(|a| -a).collect();
            let ndu: Vec<f64> = du.iter().map(|a| -a).collect();
            let gp = dual_norm_fast(&spec, x, &du)?.max(dual_norm_fast(&spec, x, &ndu)?).powf(p);
            let scale = p.powf(p) / fx.powf(p - 1.0) * gp;
            let lm = spec.norm(x, &minus).powf(p) * scale;
            let lp = spec.norm(x, &xf).powf(p) * scale;
            let rhs = u.abs().powf(p) * fx;
            let dux: f64 = du.iter().zip(&xf).map(|(a, b)| a * b).sum();
            Ok([lm * sigma, lp * sigma, rhs * sigma, u * fx * sigma, -dux * sigma])
        };
        let plan = |dir: &[f64]| -> Result<RayPlan> {
            let lo = model.ray_param(dir, inner, Side::Forward);
            let hi = model.ray_param(dir, outer, Side::Forward);
            let (Some(lo), Some(hi)) = (lo, hi) else {
                return Err(Error::Invalid("annulus leaves the chart".into()));
            };
            let shape = func.ray(dir);
            let (mut a, mut b) = (lo, hi);
            match shape.support {
                super::Support::Empty => return Ok(RayPlan::empty()),
                super::Support::Everywhere => {}
                super::Support::Interval(s, e) => {
                    a = a.max(s);
                    b = b.min(e);
                }
            }
            if !(b > a) {
                return Ok(RayPlan::empty());
            }
            Ok(RayPlan {
                start: a,
                end: RayEnd::Finite(b),
                breakpoints: shape.breaks,
                origin: Origin::Regular,
            })
        };
        let mut b = *budget;
        // the weak-form components are signed
        b.atol = b.atol.max(1e-12);
        let int = integrate(n, &integrand, &plan, &b)?;
        let [lm, lp, rhs, wl, wr] = int.value;
        let weak = func.is_nonnegative().then_some((wl, wr));
        let slack = |v: f64| tolerance * v.abs().max(1e-300);
        let mut passed = lm >= rhs - slack(rhs) && lp >= rhs - slack(rhs);
        if let Some((l, r)) = weak {
            passed &= l <= r + slack(r);
        }
        members.push(DivergenceMember {
            label: func.label(),
            lhs_minus: lm,
            lhs_plus: lp,
            rhs,
            weak,
            passed,
        });
    }
    let passed = members.iter().all(|m| m.passed) && pointwise_margin >= -1e-8;
    Ok(DivergenceReport {
        pair: *pair,
        model: model.name().to_string(),
        p,
        certified_margin,
        pointwise_margin,
        members,
        tolerance,
        passed,
    })
}

/// Seeded battery on the annulus, boxed for the checks.
pub fn annulus_battery(n: usize, inner: f64, outer: f64, seed_value: u64, count: usize) -> Result<Vec<Box<dyn TestFunction>>> {
    let region = BatteryRegion {
        inner,
        outer,
        vanish_at_origin: false,
    };
    Ok(battery(n, &region, seed_value, count)?
        .into_iter()
        .map(|f| Box::new(f) as Box<dyn TestFunction>)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_of_distance() {
        let spec = MetricSpec::euclidean(3);
        let f = ScalarField::RadialPower { exponent: 1.0, scale: 1.0 };
        let x = [0.3, -0.2, 0.5];
        let r = crate::linalg::norm2(&x);
        let l = p_laplacian(&spec, &MeasureSpec::Lebesgue, &f, &x, 2.0).unwrap();
        assert!((l - 2.0 / r).abs() < 1e-12);
    }

    #[test]
    fn critical_point_is_refused() {
        let spec = MetricSpec::euclidean(2);
        let f = ScalarField::HalfSquare { scale: 1.0, offset: 0.0 };
        assert!(matches!(
            p_laplacian(&spec, &MeasureSpec::Lebesgue, &f, &[0.0, 0.0], 2.0),
            Err(Error::Domain(_))
        ));
    }
}
