//! Rayleigh quotients of the Hardy inequalities on model spaces.
//!
//! A [`HardyScenario`] fixes the space, the inequality, the exponents, the
//! domain and a test-function family. [`HardyScenario::gate`] checks the
//! hypotheses against the model's analytic certificates before anything is
//! integrated.

pub mod divergence;
pub mod families;
pub mod quadrature;
pub mod weighted;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::{dual_norm_fast, MetricSpec};
use crate::models::{ModelSpace, Side, FUNK_TRUNCATION};

pub use families::{
    battery, smoothstep, BatteryRegion, Bump, BumpFunction, Profile, Radial, RadialContext, RayShape, Support,
    TestFunction,
};
pub use quadrature::{integrate, Budget, Integral, LevelValue, Origin, RayEnd, RayPlan};

/// Lower-bound tolerance used when a scenario does not set one.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TheoremTag {
    /// Nonpositive flag curvature, `S_o⁻ ≥ 0`, `1 < p < n`, `β > −n`, weights in `r₋`.
    #[serde(rename = "T1.1", alias = "T3.6", alias = "t36")]
    T1_1,
    /// Nonpositive flag curvature, `S_o⁺ ≤ 0`, `p > n > −β`, weights in `r₊`.
    #[serde(rename = "T1.2", alias = "T3.7", alias = "t37")]
    T1_2,
    /// Logarithmic weights on a backward ball.
    #[serde(rename = "T1.3", alias = "T3.8", alias = "t38")]
    T1_3,
    /// `Ric_N ≥ 0`, `β < −N`.
    #[serde(rename = "T1.4", alias = "T3.10", alias = "t310")]
    T1_4,
    /// `Ric ≥ 0` or `Ric_∞ ≥ 0` with an S-curvature sign, `β < −n`.
    #[serde(rename = "T3.11", alias = "t311")]
    T3_11,
    /// Closed reversible manifolds, test functions vanishing at `o`.
    #[serde(rename = "T1.6", alias = "T3.13", alias = "t313")]
    T1_6,
    /// Weighted inequality with a general weight `ρ`.
    #[serde(rename = "T4.1", alias = "t41")]
    T4_1,
    /// Improved inequality with a remainder term.
    #[serde(rename = "P4.3", alias = "p43")]
    P4_3,
}

impl TheoremTag {
    pub fn name(&self) -> &'static str {
        match self {
            TheoremTag::T1_1 => "T1.1",
            TheoremTag::T1_2 => "T1.2",
            TheoremTag::T1_3 => "T1.3",
            TheoremTag::T1_4 => "T1.4",
            TheoremTag::T3_11 => "T3.11",
            TheoremTag::T1_6 => "T1.6",
            TheoremTag::T4_1 => "T4.1",
            TheoremTag::P4_3 => "P4.3",
        }
    }
}

/// Integration domains, with radii measured by the scenario's distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    WholeChart,
    Punctured,
}

impl Domain {
    fn contains_origin(&self) -> bool {
        matches!(self, Domain::Ball { .. } | Domain::WholeChart)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Extremal { delta: f64, s: f64 },
    Cutoff { epsilon: f64, radius: f64 },
    Log { delta: f64 },
    Battery { seed: u64, count: usize },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Extremal { .. } => "extremal",
            FamilySpec::Cutoff { .. } => "cutoff",
            FamilySpec::Log { .. } => "log",
            FamilySpec::Battery { .. } => "battery",
        }
    }
}

/// Gradient term in the numerator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `max{F*^p(du), F*^p(−du)}`.
    #[default]
    Symmetrized,
    /// `F*^p(du)`.
    Plain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyScenario {
    pub id: String,
    pub model: ModelSpace,
    pub tag: TheoremTag,
    pub p: f64,
    pub beta: f64,
    /// Effective dimension `N` for the weighted-Ricci inequality.
    #[serde(default)]
    pub n_eff: Option<f64>,
    pub domain: Domain,
    pub family: FamilySpec,
    #[serde(default)]
    pub functional: Functional,
    #[serde(default)]
    pub budget: Budget,
    /// Relative slack below the constant accepted as quadrature noise.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Largest relative gap above the constant that still passes.
    #[serde(default)]
    pub max_gap: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weights {
    /// `r^{β+p}` and `r^β`.
    Power,
    /// `log(R/r)^{β+p}` and `log(R/r)^β / r^p`.
    Log { radius: f64 },
}

/// Outcome of the hypothesis gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub side: Side,
    pub weights: Weights,
    /// Dimension entering the constant (`n`, or `N` for the weighted-Ricci case).
    pub dimension: f64,
    pub target: f64,
    /// The certificates make the constant sharp.
    pub sharp: bool,
}

fn refuse<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Refused(msg.into()))
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        refuse(msg.to_string())
    }
}

impl HardyScenario {
    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOLERANCE)
    }

    /// Check exponents, domain, family and curvature hypotheses.
    pub fn gate(&self) -> Result<Gate> {
        self.model.validate()?;
        let (p, beta) = (self.p, self.beta);
        if !(p.is_finite() && beta.is_finite()) {
            return Err(Error::Invalid("exponents must be finite".into()));
        }
        require(p > 1.0, "p must exceed 1")?;
        let n = self.model.dim() as f64;
        let cert = self.model.certificates();
        let nonpos_k = cert.flag_upper.is_some_and(|k| k <= 0.0);
        let ric_ok = cert.ricci_lower.is_some_and(|c| c >= 0.0) || cert.ric_infinity_lower.is_some_and(|c| c >= 0.0);
        let power = |dim: f64| ((dim + beta).abs() / p).powf(p);
        let gate = match self.tag {
            TheoremTag::T1_1 => {
                require(nonpos_k, "needs nonpositive flag curvature")?;
                require(cert.s_to_o.is_some_and(|s| s.nonnegative()), "needs S_o^- >= 0")?;
                require(p < n && beta > -n, "needs 1 < p < n and beta > -n")?;
                require(self.domain.contains_origin(), "domain must contain the base point")?;
                Gate {
                    side: Side::Backward,
                    weights: Weights::Power,
                    dimension: n,
                    target: power(n),
                    sharp: cert.reversible,
                }
            }
            TheoremTag::T1_2 => {
                require(nonpos_k, "needs nonpositive flag curvature")?;
                require(cert.s_from_o.is_some_and(|s| s.nonpositive()), "needs S_o^+ <= 0")?;
                require(p > n && n > -beta, "needs p > n > -beta")?;
                require(self.domain.contains_origin(), "domain must contain the base point")?;
                Gate {
                    side: Side::Forward,
                    weights: Weights::Power,
                    dimension: n,
                    target: power(n),
                    sharp: cert.reversible
                        && cert.injectivity.is_infinite()
                        && cert.flag_upper == Some(0.0)
                        && cert.flag_lower == Some(0.0)
                        && cert.s_from_o == Some(crate::models::Sign::Zero),
                }
            }
            TheoremTag::T1_3 => {
                require(nonpos_k, "needs nonpositive flag curvature")?;
                require(cert.s_to_o.is_some_and(|s| s.nonnegative()), "needs S_o^- >= 0")?;
                require(p <= n && beta < -1.0, "needs 1 < p <= n and beta < -1")?;
                let Domain::Ball { radius } = self.domain else {
                    return refuse("logarithmic weights need a ball domain");
                };
                require(
                    radius > 0.0 && radius < cert.backward_injectivity,
                    "ball radius must lie below the backward injectivity radius",
                )?;
                Gate {
                    side: Side::Backward,
                    weights: Weights::Log { radius },
                    dimension: n,
                    target: ((beta + 1.0).abs() / p).powf(p),
                    sharp: cert.reversible,
                }
            }
            TheoremTag::T1_4 => {
                let Some((n0, c)) = cert.ric_n_lower else {
                    return refuse("no weighted Ricci lower bound is certified");
                };
                require(c >= 0.0, "needs Ric_N >= 0")?;
                let big_n = self.n_eff.unwrap_or(n0);
                require(big_n >= n0, "N is below the certified range")?;
                require(beta < -big_n, "needs beta < -N")?;
                require(p != big_n, "p = N is not covered")?;
                require(matches!(self.domain, Domain::Punctured | Domain::Annulus { .. }), "needs a punctured domain")?;
                Gate {
                    side: if p > big_n { Side::Forward } else { Side::Backward },
                    weights: Weights::Power,
                    dimension: big_n,
                    target: power(big_n),
                    sharp: cert.reversible && big_n == n && p + beta > -n,
                }
            }
            TheoremTag::T3_11 => {
                require(ric_ok, "needs Ric >= 0 or Ric_inf >= 0")?;
                require(beta < -n, "needs beta < -n")?;
                let side = if p > n {
                    require(cert.s_from_o.is_some_and(|s| s.nonnegative()), "needs S_o^+ >= 0")?;
                    Side::Forward
                } else if p < n {
                    require(cert.s_to_o.is_some_and(|s| s.nonpositive()), "needs S_o^- <= 0")?;
                    Side::Backward
                } else {
                    return refuse("p = n is not covered");
                };
                require(matches!(self.domain, Domain::Punctured | Domain::Annulus { .. }), "needs a punctured domain")?;
                Gate {
                    side,
                    weights: Weights::Power,
                    dimension: n,
                    target: power(n),
                    sharp: cert.reversible && p + beta > -n,
                }
            }
            TheoremTag::T1_6 => {
                require(cert.closed && cert.reversible, "needs a closed reversible space")?;
                require(cert.ric_infinity_lower.is_some_and(|c| c >= 0.0), "needs Ric_inf >= 0")?;
                require(cert.s_from_o.is_some_and(|s| s.nonnegative()), "needs S_o^+ >= 0")?;
                require(p != n && beta < -n && p + beta > -n, "needs p != n, beta < -n < p + beta")?;
                require(matches!(self.domain, Domain::WholeChart), "the inequality is stated on the whole space")?;
                Gate {
                    side: Side::Forward,
                    weights: Weights::Power,
                    dimension: n,
                    target: power(n),
                    sharp: true,
                }
            }
            TheoremTag::T4_1 | TheoremTag::P4_3 => {
                return refuse(format!("{} is handled by the weighted-Hardy checks", self.tag.name()));
            }
        };
        self.gate_family(&gate)?;
        Ok(gate)
    }

    fn gate_family(&self, gate: &Gate) -> Result<()> {
        let n = gate.dimension;
        let cert = self.model.certificates();
        match self.family {
            FamilySpec::Extremal { delta, s } => {
                require(!matches!(gate.weights, Weights::Log { .. }), "use the log family with log weights")?;
                require(delta > 0.0, "delta must be positive")?;
                require(cert.reversible, "the extremal family needs a reversible space")?;
                require(cert.s_from_o.is_some_and(|x| x.nonnegative()), "the extremal family needs S_o^+ >= 0")?;
                require(
                    cert.ricci_lower.is_some_and(|c| c >= 0.0) || cert.ric_infinity_lower.is_some_and(|c| c >= 0.0),
                    "the extremal family needs Ric >= 0 or Ric_inf >= 0",
                )?;
                require(
                    s > 0.0 && s < 1f64.min(0.5 * cert.injectivity),
                    "s must lie below min(1, i_o/2)",
                )?;
                if self.beta > -n {
                    require(!cert.closed, "beta > -n needs a noncompact space")?;
                    require(matches!(self.domain, Domain::WholeChart), "beta > -n needs the whole space")?;
                } else if self.beta < -n {
                    require(self.p > 1f64.max(-n - self.beta), "needs p > max(1, -n - beta)")?;
                    require(
                        matches!(self.domain, Domain::WholeChart | Domain::Punctured),
                        "beta < -n needs the punctured space",
                    )?;
                } else {
                    return refuse("beta = -n has no extremal family");
                }
            }
            FamilySpec::Cutoff { epsilon, radius } => {
                require(matches!(self.tag, TheoremTag::T1_1 | TheoremTag::T1_2), "the cut-off family belongs to T1.1/T1.2")?;
                require(epsilon > 0.0 && epsilon < 0.25 * radius, "needs 0 < eps < R/4")?;
                if let Domain::Ball { radius: b } = self.domain {
                    require(radius <= b, "cut-off support must stay inside the ball")?;
                }
            }
            FamilySpec::Log { delta } => {
                require(matches!(gate.weights, Weights::Log { .. }), "the log family needs log weights")?;
                require(delta > 0.0, "delta must be positive")?;
            }
            FamilySpec::Battery { count, .. } => {
                require(count > 0, "empty battery")?;
            }
        }
        if matches!(gate.weights, Weights::Log { .. }) && !matches!(self.family, FamilySpec::Log { .. } | FamilySpec::Battery { .. }) {
            return refuse("log weights take the log family or a battery");
        }
        Ok(())
    }

    fn context(&self, gate: &Gate) -> RadialContext {
        RadialContext::new(self.model.clone(), gate.side)
    }

    /// Upper bound the family must stay strictly below, if any.
    pub fn upper_bound(&self, gate: &Gate) -> Option<f64> {
        match self.family {
            FamilySpec::Extremal { delta, .. } => Some((((gate.dimension + self.beta).abs() + delta) / self.p).powf(self.p)),
            FamilySpec::Log { delta } => Some((((self.beta + 1.0).abs() + delta) / self.p).powf(self.p)),
            _ => None,
        }
    }

    /// Test functions of the scenario's family.
    pub fn test_functions(&self, gate: &Gate) -> Result<Vec<Box<dyn TestFunction>>> {
        let n = gate.dimension;
        let ctx = self.context(gate);
        Ok(match self.family {
            FamilySpec::Extremal { delta, s } => vec![Box::new(Radial {
                ctx,
                profile: Profile::extremal(n, self.p, self.beta, delta, s),
            })],
            FamilySpec::Cutoff { epsilon, radius } => vec![Box::new(Radial {
                ctx,
                profile: Profile::cutoff(n, self.p, self.beta, epsilon, radius),
            })],
            FamilySpec::Log { delta } => {
                let Weights::Log { radius } = gate.weights else {
                    return refuse("log family without log weights");
                };
                vec![Box::new(Radial {
                    ctx,
                    profile: Profile::log(self.p, self.beta, delta, radius),
                })]
            }
            FamilySpec::Battery { seed, count } => {
                let region = battery_region(&self.model, &self.domain, gate.side, self.tag == TheoremTag::T1_6)?;
                battery(self.model.dim(), &region, seed, count)?
                    .into_iter()
                    .map(|f| Box::new(f) as Box<dyn TestFunction>)
                    .collect()
            }
        })
    }
}

/// Smallest coordinate radius of the distance sphere of radius `r`.
fn coordinate_inradius(model: &ModelSpace, r: f64, side: Side) -> Option<f64> {
    let n = model.dim();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
    let dirs = crate::metric::sphere_directions(n, 256, &mut rng);
    let mut lo = f64::INFINITY;
    for d in &dirs {
        lo = lo.min(model.ray_param(d, r, side)?);
    }
    Some(lo)
}

/// Coordinate region for battery supports inside `domain`.
pub fn battery_region(model: &ModelSpace, domain: &Domain, side: Side, vanish_at_origin: bool) -> Result<BatteryRegion> {
    let chart = model.chart_limit();
    let whole = if chart.is_finite() && chart > 2.0 { 1.5 } else if chart.is_finite() { 0.9 * chart } else { 1.0 };
    let isotropic = !matches!(model, ModelSpace::Minkowski { .. });
    let shrink = if isotropic { 1.0 } else { 0.95 };
    let to_coord = |r: f64| -> Result<f64> {
        coordinate_inradius(model, r, side)
            .map(|c| (c * shrink).min(whole))
            .ok_or_else(|| Error::Invalid(format!("distance {r} is not reached in the chart")))
    };
    let outer_of = |r: f64| -> Result<f64> {
        match coordinate_inradius(model, r, side) {
            Some(c) => Ok((c * shrink).min(whole)),
            None => Ok(whole),
        }
    };
    let (inner, outer) = match *domain {
        Domain::Ball { radius } => (0.0, outer_of(radius)?),
        Domain::Annulus { inner, outer } => {
            if !(inner > 0.0 && inner < outer) {
                return Err(Error::Invalid(format!("annulus ({inner}, {outer}) is empty")));
            }
            let hi = outer_of(outer)?;
            // largest coordinate radius of the inner distance sphere
            let lo = if isotropic {
                to_coord(inner)?
            } else {
                let n = model.dim();
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
                crate::metric::sphere_directions(n, 256, &mut rng)
                    .iter()
                    .filter_map(|d| model.ray_param(d, inner, side))
                    .fold(0.0, f64::max)
                    / shrink
            };
            (lo, hi)
        }
        Domain::WholeChart => (0.0, whole),
        Domain::Punctured => (0.1 * whole, whole),
    };
    if !(inner < outer) {
        return Err(Error::Invalid(format!("battery region [{inner}, {outer}] is empty")));
    }
    Ok(BatteryRegion {
        inner,
        outer,
        vanish_at_origin,
    })
}

/// End of the usable chart along a ray.
pub fn chart_end(model: &ModelSpace) -> RayEnd {
    match model {
        ModelSpace::Sphere { .. } => RayEnd::Truncated {
            at: model.chart_limit(),
            limit: f64::INFINITY,
        },
        ModelSpace::Funk { .. } | ModelSpace::Hyperbolic { .. } => RayEnd::Truncated {
            at: FUNK_TRUNCATION,
            limit: 1.0,
        },
        _ => RayEnd::Infinite,
    }
}

/// Radial quadrature plan for `shape` restricted to `domain` along `dir`.
///
/// With `log_radius = Some(R)` the weights are powers of `log(R/r)`: the
/// origin is graded logarithmically and the support end is singular.
pub fn plan_ray(
    model: &ModelSpace,
    domain: &Domain,
    side: Side,
    shape: &RayShape,
    log_radius: Option<f64>,
    dir: &[f64],
) -> Result<RayPlan> {
    let singular_end = log_radius.is_some();
    let chart = chart_end(model);
    let bound = |r: f64| match model.ray_param(dir, r, side) {
        Some(b) if b < chart.position() => RayEnd::Finite(b),
        _ => chart,
    };
    let (mut lo, mut hi) = match *domain {
        Domain::Ball { radius } => (0.0, bound(radius)),
        Domain::Annulus { inner, outer } => {
            let a = model
                .ray_param(dir, inner, side)
                .ok_or_else(|| Error::Invalid(format!("annulus inner radius {inner} outside the chart")))?;
            (a, bound(outer))
        }
        Domain::WholeChart | Domain::Punctured => (0.0, chart),
    };
    match shape.support {
        Support::Empty => return Ok(RayPlan::empty()),
        Support::Everywhere => {}
        Support::Interval(a, b) => {
            lo = lo.max(a);
            if b <= hi.position() * (1.0 + 1e-14) {
                hi = if singular_end { RayEnd::Singular(b) } else { RayEnd::Finite(b) };
            }
        }
    }
    if !(hi.position() > lo) {
        return Ok(RayPlan::empty());
    }
    let origin = match log_radius {
        _ if lo > 0.0 => Origin::Regular,
        Some(r) => Origin::Log {
            scale: model.ray_param(dir, r, side).unwrap_or(hi.position()),
        },
        None => Origin::Power,
    };
    Ok(RayPlan {
        start: lo,
        end: hi,
        breakpoints: shape.breaks.clone(),
        origin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub scenario: String,
    pub tag: TheoremTag,
    pub model: String,
    pub family: String,
    pub p: f64,
    pub beta: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub quotient: f64,
    pub target: f64,
    /// `(quotient − target) / target`.
    pub relative_gap: f64,
    pub error: f64,
    /// Mass beyond the chart truncation, numerator then denominator.
    pub truncation: [Option<f64>; 2],
    pub trace: Vec<LevelValue>,
    pub upper_bound: Option<f64>,
    pub sharp: bool,
    pub tolerance: f64,
    pub max_gap: Option<f64>,
    pub passed: bool,
}

/// Numerator and denominator integrals for one test function.
pub fn quotient_integrals(scenario: &HardyScenario, gate: &Gate, f: &dyn TestFunction) -> Result<Integral<2>> {
    let model = &scenario.model;
    let n = model.dim();
    let spec: MetricSpec = model.metric();
    let measure = model.measure();
    let ctx = RadialContext::new(model.clone(), gate.side);
    let (p, beta) = (scenario.p, scenario.beta);
    let functional = scenario.functional;
    let weights = gate.weights;
    let integrand = |x: &[f64]| -> Result<[f64; 2]> {
        let (u, du) = f.eval(x)?;
        if u == 0.0 && du.iter().all(|a| *a == 0.0) {
            return Ok([0.0, 0.0]);
        }
        let r = ctx.radius(x);
        let sigma = measure.density(&spec, x)?;
        let mut grad = dual_norm_fast(&spec, x, &du)?;
        if functional == Functional::Symmetrized && !spec.is_reversible() {
            let minus: Vec<f64> = du.iter().map(|a| -a).collect();
            grad = grad.max(dual_norm_fast(&spec, x, &minus)?);
        }
        let up = u.abs().powf(p);
        let gp = grad.powf(p);
        let (num, den) = match weights {
            Weights::Power => (r.powf(beta + p) * gp, r.powf(beta) * up),
            Weights::Log { radius } => {
                let l = (radius / r).ln();
                (l.powf(beta + p) * gp, l.powf(beta) * up / r.powf(p))
            }
        };
        Ok([num * sigma, den * sigma])
    };
    let log_radius = match weights {
        Weights::Log { radius } => Some(radius),
        Weights::Power => None,
    };
    let plan = |dir: &[f64]| {
        let shape = f.ray(dir);
        plan_ray(model, &scenario.domain, gate.side, &shape, log_radius, dir)
    };
    integrate(n, &integrand, &plan, &scenario.budget)
}

pub fn rayleigh_hardy(scenario: &HardyScenario, gate: &Gate, f: &dyn TestFunction) -> Result<QuotientReport> {
    let int = quotient_integrals(scenario, gate, f)?;
    let [num, den] = int.value;
    if !(num > 0.0 && den > 0.0) {
        return Err(Error::Degenerate(format!(
            "{}: numerator {num:e} and denominator {den:e} must be positive",
            f.label()
        )));
    }
    let q = num / den;
    let err = q * (int.error[0] / num + int.error[1] / den);
    let target = gate.target;
    let gap = (q - target) / target;
    let tol = scenario.tolerance();
    let upper = scenario.upper_bound(gate);
    let mut passed = q >= target * (1.0 - tol);
    if let Some(u) = upper {
        passed &= q < u;
    }
    if let Some(g) = scenario.max_gap {
        passed &= gap < g;
    }
    Ok(QuotientReport {
        scenario: scenario.id.clone(),
        tag: scenario.tag,
        model: scenario.model.name().to_string(),
        family: f.label(),
        p: scenario.p,
        beta: scenario.beta,
        numerator: num,
        denominator: den,
        quotient: q,
        target,
        relative_gap: gap,
        error: err,
        truncation: int.truncation,
        trace: int.trace,
        upper_bound: upper,
        sharp: gate.sharp,
        tolerance: tol,
        max_gap: scenario.max_gap,
        passed,
    })
}

/// Logarithmic-weight quotient; identical to [`rayleigh_hardy`] with the
/// gate's log weights, refused for other tags.
pub fn rayleigh_log(scenario: &HardyScenario, gate: &Gate, f: &dyn TestFunction) -> Result<QuotientReport> {
    if !matches!(gate.weights, Weights::Log { .. }) {
        return refuse("log quotient needs a T1.3 scenario");
    }
    rayleigh_hardy(scenario, gate, f)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub tag: TheoremTag,
    pub gate: Gate,
    pub reports: Vec<QuotientReport>,
    pub worst_gap: f64,
    pub passed: bool,
}

/// Gate the scenario and evaluate every test function of its family.
pub fn run_scenario(scenario: &HardyScenario) -> Result<ScenarioReport> {
    let gate = scenario.gate()?;
    let fns = scenario.test_functions(&gate)?;
    let mut reports = Vec::with_capacity(fns.len());
    for f in &fns {
        reports.push(rayleigh_hardy(scenario, &gate, f.as_ref())?);
    }
    let worst_gap = reports.iter().map(|r| r.relative_gap).fold(f64::INFINITY, f64::min);
    let passed = reports.iter().all(|r| r.passed);
    Ok(ScenarioReport {
        scenario: scenario.id.clone(),
        tag: scenario.tag,
        gate,
        reports,
        worst_gap,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub quotient: f64,
    pub relative_gap: f64,
    pub error: f64,
    pub upper_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub scenario: String,
    pub family: String,
    pub target: f64,
    pub rows: Vec<SweepRow>,
    /// Quotients decrease along the sweep, up to their error estimates.
    pub monotone: bool,
    pub final_gap: f64,
    pub warning: Option<String>,
    /// Every quotient lies strictly between the constant and its upper
    /// bound, the sweep is monotone and the final gap is within `max_gap`.
    pub passed: bool,
}

/// Re-run the scenario with its family parameter (`ε` or `δ`) replaced by
/// each value in turn.
pub fn sharpness_sweep(scenario: &HardyScenario, values: &[f64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Invalid("empty sweep".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    let mut target = f64::NAN;
    for &v in values {
        let mut s = scenario.clone();
        s.family = match scenario.family {
            FamilySpec::Cutoff { radius, .. } => FamilySpec::Cutoff { epsilon: v, radius },
            FamilySpec::Extremal { s, .. } => FamilySpec::Extremal { delta: v, s },
            FamilySpec::Log { .. } => FamilySpec::Log { delta: v },
            FamilySpec::Battery { .. } => return refuse("a battery has no sweep parameter"),
        };
        let gate = s.gate()?;
        target = gate.target;
        let f = s.test_functions(&gate)?;
        let r = rayleigh_hardy(&s, &gate, f[0].as_ref())?;
        rows.push(SweepRow {
            parameter: v,
            quotient: r.quotient,
            relative_gap: r.relative_gap,
            error: r.error,
            upper_bound: r.upper_bound,
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].quotient <= w[0].quotient + w[0].error + w[1].error);
    let warning = (!monotone).then(|| "quotients are not monotone beyond their error estimates".to_string());
    let final_gap = rows.last().map_or(f64::NAN, |r| r.relative_gap);
    let inside = rows
        .iter()
        .all(|r| r.quotient > target && r.upper_bound.map_or(true, |ub| r.quotient < ub));
    let passed = inside && monotone && scenario.max_gap.map_or(true, |g| final_gap <= g);
    Ok(SweepTable {
        scenario: scenario.id.clone(),
        family: scenario.family.name().to_string(),
        target,
        final_gap,
        rows,
        monotone,
        warning,
        passed,
    })
}

/// Radial ramp on the Funk disk: rises over `[a, b]` and falls over
/// `[b, b + h]` in coordinate radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl TestFunction for Ramp {
    fn label(&self) -> String {
        format!("ramp(a={}, b={}, h={})", self.a, self.b, self.h)
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let rho = linalg::norm2(x);
        let (v, dv) = if rho < self.b {
            let w = self.b - self.a;
            let (s, ds) = smoothstep((rho - self.a) / w);
            (1.0 - s, -ds / w)
        } else {
            let (s, ds) = smoothstep((rho - self.b) / self.h);
            (s, ds / self.h)
        };
        Ok((v, x.iter().map(|c| dv * c / rho).collect()))
    }

    fn ray(&self, _dir: &[f64]) -> RayShape {
        RayShape {
            support: Support::Interval(self.a, self.b + self.h),
            breaks: vec![self.b],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoRow {
    pub a: f64,
    pub b: f64,
    pub h: f64,
    pub quotient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunkDemo {
    pub banner: String,
    pub rows: Vec<DemoRow>,
    pub best: DemoRow,
}

pub const DEMO_BANNER: &str = "non-acceptance demo: exploratory search, no threshold is asserted";

/// Search over ramps on the Funk disk for small values of
/// `∫F*²(du) / ∫u²/r₊²` with the non-symmetrized functional.
pub fn demo_funk_infimum(budget: &Budget) -> Result<FunkDemo> {
    let model = ModelSpace::Funk { dim: 2 };
    let mut rows = Vec::new();
    for &b in &[0.5, 0.8, 0.95, 0.99] {
        for &hf in &[0.5, 0.1, 0.02] {
            let h = hf * (FUNK_TRUNCATION - b);
            let a = 0.5 * b;
            let ramp = Ramp { a, b, h };
            let scenario = HardyScenario {
                id: "demo-funk".into(),
                model: model.clone(),
                tag: TheoremTag::T1_1,
                p: 2.0,
                beta: -2.0,
                n_eff: None,
                domain: Domain::WholeChart,
                family: FamilySpec::Battery { seed: 0, count: 1 },
                functional: Functional::Plain,
                budget: *budget,
                tolerance: None,
                max_gap: None,
            };
            let gate = Gate {
                side: Side::Forward,
                weights: Weights::Power,
                dimension: 2.0,
                target: 0.0,
                sharp: false,
            };
            let int = quotient_integrals(&scenario, &gate, &ramp)?;
            rows.push(DemoRow {
                a,
                b,
                h,
                quotient: int.value[0] / int.value[1],
            });
        }
    }
    let best = rows
        .iter()
        .min_by(|x, y| x.quotient.total_cmp(&y.quotient))
        .cloned()
        .ok_or_else(|| Error::Invalid("empty demo".into()))?;
    Ok(FunkDemo {
        banner: DEMO_BANNER.into(),
        rows,
        best,
    })
}
