//! Hardy inequalities with a general weight `ρ` and the improved inequality
//! with an `L²` remainder on bounded domains.

use serde::{Deserialize, Serialize};

use super::families::{battery, BatteryRegion, RayShape, Support, TestFunction};
use super::quadrature::{integrate, Budget};
use super::{plan_ray, Domain, LevelValue, QuotientReport, TheoremTag};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg;
use crate::metric::{dual_norm_fast, uniformity, Region, SampleBudget};
use crate::models::{ModelSpace, Side};

/// First zero of the Bessel function `J₀`.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;
/// Factor applied to the Ritz value: a finite basis only bounds the
/// infimum from above.
pub const THETA_SAFETY: f64 = 0.5;

fn refuse<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Refused(msg.into()))
}

/// Sign of `Δ_p ρ` on a Euclidean space, from the closed form for radial
/// powers: `Δ_p(s r^e) = sgn(se)|se|^{p−1}((e−1)(p−1)+n−1) r^{(e−1)(p−1)−1}`.
pub fn p_laplacian_sign(model: &ModelSpace, rho: &ScalarField, p: f64) -> Result<f64> {
    if !matches!(model, ModelSpace::Euclidean { .. }) {
        return refuse(format!("no weight certificate on the {} model", model.name()));
    }
    let n = model.dim() as f64;
    let (scale, e) = match *rho {
        ScalarField::RadialPower { exponent, scale } => (scale, exponent),
        ScalarField::HalfSquare { scale, .. } => (scale, 2.0),
        _ => return refuse("weight certificates cover radial powers and half squares"),
    };
    let k = (e - 1.0) * (p - 1.0) + n - 1.0;
    let s = (scale * e).signum() * k;
    Ok(if s.abs() < 1e-14 { 0.0 } else { s.signum() })
}

/// Smallest and largest value of the weight on `domain`; refuses when the
/// weight is not positive and smooth there.
fn weight_range(rho: &ScalarField, domain: &Domain) -> Result<(f64, f64)> {
    let (lo, hi) = match *domain {
        Domain::Ball { radius } => (0.0, radius),
        Domain::Annulus { inner, outer } => (inner, outer),
        _ => return refuse("weighted checks need a ball or an annulus"),
    };
    let vals = match *rho {
        ScalarField::RadialPower { exponent, scale } => {
            if lo == 0.0 && exponent < 0.0 {
                return refuse("weight is singular at the base point; use an annulus");
            }
            [scale * lo.powf(exponent), scale * hi.powf(exponent)]
        }
        ScalarField::HalfSquare { scale, offset } => [offset + 0.5 * scale * lo * lo, offset + 0.5 * scale * hi * hi],
        _ => return refuse("weight certificates cover radial powers and half squares"),
    };
    let (a, b) = (vals[0].min(vals[1]), vals[0].max(vals[1]));
    if !(a > 0.0) {
        return refuse(format!("weight is not positive on the domain (min {a})"));
    }
    Ok((a, b))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightedFamily {
    Battery { seed: u64, count: usize },
    /// `C ρ^{(p−1−α)/p}`, an extremal of the weighted inequality.
    PowerOfWeight { c: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedScenario {
    pub id: String,
    pub model: ModelSpace,
    pub rho: ScalarField,
    pub alpha: f64,
    pub p: f64,
    pub domain: Domain,
    pub family: WeightedFamily,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedReport {
    pub scenario: String,
    pub target: f64,
    /// `p − 1 − α = 0`: the inequality is trivial and nothing was integrated.
    pub skipped: bool,
    pub reports: Vec<QuotientReport>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
struct PowerOfWeight {
    rho: ScalarField,
    c: f64,
    exponent: f64,
}

impl TestFunction for PowerOfWeight {
    fn label(&self) -> String {
        format!("power_of_weight(C={}, e={})", self.c, self.exponent)
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let r = self.rho.value(x);
        let dr = self.rho.differential(x);
        let k = self.c * self.exponent * r.powf(self.exponent - 1.0);
        Ok((self.c * r.powf(self.exponent), dr.iter().map(|a| k * a).collect()))
    }

    fn ray(&self, _dir: &[f64]) -> RayShape {
        RayShape {
            support: Support::Everywhere,
            breaks: Vec::new(),
        }
    }
}

fn battery_in(model: &ModelSpace, domain: &Domain, seed: u64, count: usize) -> Result<Vec<Box<dyn TestFunction>>> {
    let (inner, outer) = match *domain {
        Domain::Ball { radius } => (0.0, radius),
        Domain::Annulus { inner, outer } => (inner, outer),
        _ => return refuse("weighted checks need a ball or an annulus"),
    };
    let region = BatteryRegion {
        inner,
        outer,
        vanish_at_origin: false,
    };
    Ok(battery(model.dim(), &region, seed, count)?
        .into_iter()
        .map(|f| Box::new(f) as Box<dyn TestFunction>)
        .collect())
}

/// `∫ρ^α max F*^p(±du) ≥ (|p−1−α|/p)^p ∫ F^p(∇ρ) ρ^{α−p} |u|^p`.
pub fn weighted_hardy_quotient(s: &WeightedScenario) -> Result<WeightedReport> {
    s.model.validate()?;
    let (p, alpha) = (s.p, s.alpha);
    if !(p > 1.0) {
        return refuse("p must exceed 1");
    }
    if alpha > p {
        return refuse("alpha > p needs integrability conditions that are not certified");
    }
    weight_range(&s.rho, &s.domain)?;
    let sign = p_laplacian_sign(&s.model, &s.rho, p)?;
    let gamma = p - 1.0 - alpha;
    let target = (gamma.abs() / p).powf(p);
    if gamma == 0.0 {
        return Ok(WeightedReport {
            scenario: s.id.clone(),
            target,
            skipped: true,
            reports: Vec::new(),
            passed: true,
        });
    }
    if -gamma * sign < 0.0 {
        return refuse(format!("certificate fails: -(p-1-alpha)·Δ_p ρ has sign {}", -gamma * sign));
    }
    let tol = s.tolerance.unwrap_or(super::DEFAULT_TOLERANCE);
    let (functions, equality) = match s.family {
        WeightedFamily::Battery { seed, count } => (battery_in(&s.model, &s.domain, seed, count)?, false),
        WeightedFamily::PowerOfWeight { c } => {
            if !matches!(s.domain, Domain::Annulus { .. }) {
                return refuse("the extremal is evaluated on an annulus");
            }
            let f: Box<dyn TestFunction> = Box::new(PowerOfWeight {
                rho: s.rho.clone(),
                c,
                exponent: gamma / p,
            });
            (vec![f], true)
        }
    };
    let spec = s.model.metric();
    let measure = s.model.measure();
    let n = s.model.dim();
    let mut reports = Vec::with_capacity(functions.len());
    for f in &functions {
        let integrand = |x: &[f64]| -> Result<[f64; 2]> {
            let (u, du) = f.eval(x)?;
            if u == 0.0 && du.iter().all(|a| *a == 0.0) {
                return Ok([0.0, 0.0]);
            }
            let sigma = measure.density(&spec, x)?;
            let r = s.rho.value(x);
            let ndu: Vec<f64> = du.iter().map(|a| -a).collect();
            let g = dual_norm_fast(&spec, x, &du)?.max(dual_norm_fast(&spec, x, &ndu)?);
            let fr = dual_norm_fast(&spec, x, &s.rho.differential(x))?;
            Ok([
                r.powf(alpha) * g.powf(p) * sigma,
                fr.powf(p) * r.powf(alpha - p) * u.abs().powf(p) * sigma,
            ])
        };
        let plan = |dir: &[f64]| plan_ray(&s.model, &s.domain, Side::Forward, &f.ray(dir), None, dir);
        let int = integrate(n, &integrand, &plan, &s.budget)?;
        let [num, den] = int.value;
        if !(num > 0.0 && den > 0.0) {
            return Err(Error::Degenerate(format!("{}: empty integrals", f.label())));
        }
        let q = num / den;
        let gap = (q - target) / target;
        let passed = if equality { gap.abs() <= tol } else { q >= target * (1.0 - tol) };
        reports.push(QuotientReport {
            scenario: s.id.clone(),
            tag: TheoremTag::T4_1,
            model: s.model.name().to_string(),
            family: f.label(),
            p,
            beta: alpha,
            numerator: num,
            denominator: den,
            quotient: q,
            target,
            relative_gap: gap,
            error: q * (int.error[0] / num + int.error[1] / den),
            truncation: int.truncation,
            trace: int.trace,
            upper_bound: None,
            sharp: true,
            tolerance: tol,
            max_gap: None,
            passed,
        });
    }
    let passed = reports.iter().all(|r| r.passed);
    Ok(WeightedReport {
        scenario: s.id.clone(),
        target,
        skipped: false,
        reports,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrezisVazquezScenario {
    pub id: String,
    pub model: ModelSpace,
    pub rho: ScalarField,
    pub radius: f64,
    pub seed: u64,
    pub count: usize,
    #[serde(default)]
    pub budget: Budget,
    /// Overrides the lower bound for `Θ`.
    #[serde(default)]
    pub theta_lower: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvMember {
    pub label: String,
    /// `∫ max F*²(±du)`.
    pub gradient: f64,
    /// `¼ ∫ u² F²(∇ρ)/ρ²`.
    pub hardy: f64,
    /// `(Θ_lower/Λ_F) ∫ u²`.
    pub remainder: f64,
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaBound {
    /// Smallest Ritz value over the polynomial bubble basis. Ritz values
    /// bound the true infimum from above.
    pub ritz: f64,
    pub safety_factor: f64,
    /// `safety_factor · ritz`, the value used in the check.
    pub lower: f64,
    /// `(min ρ / max ρ)·j₀₁²/R²`, a rigorous lower bound from the first
    /// Dirichlet eigenvalue of the disk. Reported as a cross-check.
    pub analytic: f64,
    pub basis_size: usize,
    pub trace: Vec<LevelValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvReport {
    pub scenario: String,
    pub theta: ThetaBound,
    /// `Θ_lower` actually used.
    pub theta_lower: f64,
    pub uniformity: f64,
    pub members: Vec<BvMember>,
    pub passed: bool,
}

const RITZ_DEGREE: u32 = 4;
const RITZ_BASIS: usize = 15;
const RITZ_ENTRIES: usize = RITZ_BASIS * (RITZ_BASIS + 1) / 2;
const RITZ_K: usize = 2 * RITZ_ENTRIES;

fn ritz_exponents() -> Vec<(i32, i32)> {
    let mut out = Vec::with_capacity(RITZ_BASIS);
    for d in 0..=RITZ_DEGREE as i32 {
        for a in 0..=d {
            out.push((a, d - a));
        }
    }
    out
}

/// Rayleigh–Ritz value of `∫ρ|du|² / ∫ρu²` on the disk over the bubbles
/// `(1 − |x|²/R²)·x^a y^b`, `a + b ≤ 4`.
pub fn theta_bound(rho: &ScalarField, radius: f64, budget: &Budget) -> Result<ThetaBound> {
    let (rmin, rmax) = weight_range(rho, &Domain::Ball { radius })?;
    let exps = ritz_exponents();
    let r2 = radius * radius;
    let integrand = |x: &[f64]| -> Result<[f64; RITZ_K]> {
        let w = rho.value(x);
        let b = 1.0 - (x[0] * x[0] + x[1] * x[1]) / r2;
        let (db0, db1) = (-2.0 * x[0] / r2, -2.0 * x[1] / r2);
        let mut v = [0.0; RITZ_BASIS];
        let mut g = [[0.0; 2]; RITZ_BASIS];
        for (i, &(a, c)) in exps.iter().enumerate() {
            let m = x[0].powi(a) * x[1].powi(c);
            let m0 = if a > 0 { a as f64 * x[0].powi(a - 1) * x[1].powi(c) } else { 0.0 };
            let m1 = if c > 0 { c as f64 * x[0].powi(a) * x[1].powi(c - 1) } else { 0.0 };
            v[i] = b * m;
            g[i] = [db0 * m + b * m0, db1 * m + b * m1];
        }
        let mut out = [0.0; RITZ_K];
        let mut k = 0;
        for i in 0..RITZ_BASIS {
            for j in i..RITZ_BASIS {
                out[k] = w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                out[RITZ_ENTRIES + k] = w * v[i] * v[j];
                k += 1;
            }
        }
        Ok(out)
    };
    let model = ModelSpace::Euclidean { dim: 2 };
    let domain = Domain::Ball { radius };
    let shape = RayShape {
        support: Support::Everywhere,
        breaks: Vec::new(),
    };
    let plan = |dir: &[f64]| plan_ray(&model, &domain, Side::Forward, &shape, None, dir);
    let mut b = *budget;
    b.atol = b.atol.max(1e-13);
    let int = integrate(2, &integrand, &plan, &b)?;
    let mut a = vec![0.0; RITZ_BASIS * RITZ_BASIS];
    let mut m = vec![0.0; RITZ_BASIS * RITZ_BASIS];
    let mut k = 0;
    for i in 0..RITZ_BASIS {
        for j in i..RITZ_BASIS {
            a[i * RITZ_BASIS + j] = int.value[k];
            a[j * RITZ_BASIS + i] = int.value[k];
            m[i * RITZ_BASIS + j] = int.value[RITZ_ENTRIES + k];
            m[j * RITZ_BASIS + i] = int.value[RITZ_ENTRIES + k];
            k += 1;
        }
    }
    let ritz = linalg::min_generalized_eigen(&a, &m, RITZ_BASIS)?;
    let analytic = rmin / rmax * BESSEL_J0_FIRST_ZERO.powi(2) / r2;
    if ritz < analytic * (1.0 - 1e-9) {
        return Err(Error::numerical(
            "Ritz value below the analytic lower bound",
            format!("ritz {ritz}, analytic {analytic}"),
        ));
    }
    Ok(ThetaBound {
        ritz,
        safety_factor: THETA_SAFETY,
        lower: THETA_SAFETY * ritz,
        analytic,
        basis_size: RITZ_BASIS,
        trace: int.trace,
    })
}

/// `∫max F*²(±du) ≥ ¼∫u² F²(∇ρ)/ρ² + (Θ_lower/Λ_F)∫u²` on the disk of
/// radius `R` for a superharmonic weight.
pub fn brezis_vazquez_check(s: &BrezisVazquezScenario) -> Result<BvReport> {
    s.model.validate()?;
    if !matches!(s.model, ModelSpace::Euclidean { dim: 2 }) {
        return refuse("the Θ bound is built on the Euclidean disk");
    }
    let sign = p_laplacian_sign(&s.model, &s.rho, 2.0)?;
    if sign > 0.0 {
        return refuse("weight is not superharmonic");
    }
    let domain = Domain::Ball { radius: s.radius };
    weight_range(&s.rho, &domain)?;
    let theta = theta_bound(&s.rho, s.radius, &s.budget)?;
    let theta_lower = s.theta_lower.unwrap_or(theta.lower);
    let spec = s.model.metric();
    let lambda = uniformity(
        &spec,
        &Region::Ball {
            center: s.model.origin(),
            radius: s.radius,
        },
        &SampleBudget::default(),
    )?
    .uniformity;
    let measure = s.model.measure();
    let functions = battery_in(&s.model, &domain, s.seed, s.count)?;
    let mut members = Vec::with_capacity(functions.len());
    for f in &functions {
        let integrand = |x: &[f64]| -> Result<[f64; 3]> {
            let (u, du) = f.eval(x)?;
            if u == 0.0 && du.iter().all(|a| *a == 0.0) {
                return Ok([0.0; 3]);
            }
            let sigma = measure.density(&spec, x)?;
            let ndu: Vec<f64> = du.iter().map(|a| -a).collect();
            let g = dual_norm_fast(&spec, x, &du)?.max(dual_norm_fast(&spec, x, &ndu)?);
            let r = s.rho.value(x);
            let fr = dual_norm_fast(&spec, x, &s.rho.differential(x))?;
            Ok([g * g * sigma, u * u * fr * fr / (r * r) * sigma, u * u * sigma])
        };
        let plan = |dir: &[f64]| plan_ray(&s.model, &domain, Side::Forward, &f.ray(dir), None, dir);
        let int = integrate(2, &integrand, &plan, &s.budget)?;
        let [g, h, l2] = int.value;
        let hardy = 0.25 * h;
        let remainder = theta_lower / lambda * l2;
        let margin = g - hardy - remainder;
        members.push(BvMember {
            label: f.label(),
            gradient: g,
            hardy,
            remainder,
            margin,
            passed: margin > 0.0,
        });
    }
    let passed = members.iter().all(|m| m.passed);
    Ok(BvReport {
        scenario: s.id.clone(),
        theta,
        theta_lower,
        uniformity: lambda,
        members,
        passed,
    })
}
