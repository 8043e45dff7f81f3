//! Model spaces with closed-form distances and analytically asserted
//! curvature facts.
//!
//! Theorem hypotheses are never inferred from samples: each model carries a
//! [`Certificates`] table filled in by hand from its known geometry, and the
//! numerical spot checks in the test suite confirm the entries.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg;
use crate::measure::{BaseMeasure, MeasureSpec};
use crate::metric::MetricSpec;
use crate::real::Real;

/// Which distance from the base point: `r₊ = d(o, ·)` or `r₋ = d(·, o)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Forward,
    Backward,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Forward => Side::Backward,
            Side::Backward => Side::Forward,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Zero,
    NonNegative,
    NonPositive,
}

impl Sign {
    pub fn nonnegative(self) -> bool {
        matches!(self, Sign::Zero | Sign::NonNegative)
    }

    pub fn nonpositive(self) -> bool {
        matches!(self, Sign::Zero | Sign::NonPositive)
    }
}

/// Curvature facts known in closed form for a model. `None` means no bound
/// is asserted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    /// `K ≤ value` for every flag.
    pub flag_upper: Option<f64>,
    pub flag_lower: Option<f64>,
    /// `Ric(y) ≥ value` for unit `y`.
    pub ricci_lower: Option<f64>,
    pub ric_infinity_lower: Option<f64>,
    /// `(N₀, c)`: `Ric_N ≥ c` for every `N ≥ N₀`.
    pub ric_n_lower: Option<(f64, f64)>,
    /// `S(y) ≥ value` for unit `y`.
    pub s_lower: Option<f64>,
    /// Sign of `S` along minimal geodesics from `o` (`S_o⁺`).
    pub s_from_o: Option<Sign>,
    /// Sign of `S` along minimal geodesics to `o` (`S_o⁻`).
    pub s_to_o: Option<Sign>,
    pub reversible: bool,
    pub closed: bool,
    pub cartan_hadamard: bool,
    /// Forward and backward injectivity radius at `o`.
    pub injectivity: f64,
    pub backward_injectivity: f64,
}

/// Antipodal cap excluded from the stereographic sphere chart.
pub const SPHERE_CAP: f64 = 1e-3;
/// Coordinate truncation of the Funk ball.
pub const FUNK_TRUNCATION: f64 = 1.0 - 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpace {
    Euclidean { dim: usize },
    /// Constant-coefficient norm with its Busemann–Hausdorff measure.
    Minkowski { metric: MetricSpec },
    /// Euclidean space with `e^{-f}dx`, `f = |x|²/2 + (n/2) log 2π`.
    Gaussian { dim: usize },
    /// Poincaré ball, curvature `-1`.
    Hyperbolic { dim: usize },
    /// Unit round sphere in stereographic coordinates from the north pole;
    /// `o` is the south pole at the coordinate origin.
    Sphere { dim: usize },
    /// Funk metric of the unit ball with its Busemann–Hausdorff measure.
    Funk { dim: usize },
}

impl ModelSpace {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpace::Euclidean { .. } => "euclidean",
            ModelSpace::Minkowski { .. } => "minkowski",
            ModelSpace::Gaussian { .. } => "gaussian",
            ModelSpace::Hyperbolic { .. } => "hyperbolic",
            ModelSpace::Sphere { .. } => "sphere",
            ModelSpace::Funk { .. } => "funk",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpace::Minkowski { metric } => metric.dim(),
            ModelSpace::Euclidean { dim }
            | ModelSpace::Gaussian { dim }
            | ModelSpace::Hyperbolic { dim }
            | ModelSpace::Sphere { dim }
            | ModelSpace::Funk { dim } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < 2 {
            return Err(Error::Invalid(format!("model dimension {} < 2", self.dim())));
        }
        if let ModelSpace::Minkowski { metric } = self {
            if !metric.is_minkowski() {
                return Err(Error::Invalid("minkowski model needs an x-independent metric".into()));
            }
            metric.validate()?;
        }
        Ok(())
    }

    pub fn metric(&self) -> MetricSpec {
        let n = self.dim();
        match self {
            ModelSpace::Euclidean { .. } | ModelSpace::Gaussian { .. } => MetricSpec::euclidean(n),
            ModelSpace::Minkowski { metric } => metric.clone(),
            ModelSpace::Hyperbolic { .. } => MetricSpec::hyperbolic(n),
            ModelSpace::Sphere { .. } => MetricSpec::sphere(n),
            ModelSpace::Funk { .. } => MetricSpec::funk(n),
        }
    }

    pub fn measure(&self) -> MeasureSpec {
        match self {
            ModelSpace::Euclidean { .. } => MeasureSpec::Lebesgue,
            ModelSpace::Gaussian { dim } => MeasureSpec::Weighted {
                base: BaseMeasure::Lebesgue,
                f: ScalarField::gaussian(*dim),
            },
            _ => MeasureSpec::BusemannHausdorff,
        }
    }

    pub fn origin(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    pub fn certificates(&self) -> Certificates {
        let n = self.dim() as f64;
        let flat = Certificates {
            flag_upper: Some(0.0),
            flag_lower: Some(0.0),
            ricci_lower: Some(0.0),
            ric_infinity_lower: Some(0.0),
            ric_n_lower: Some((n, 0.0)),
            s_lower: Some(0.0),
            s_from_o: Some(Sign::Zero),
            s_to_o: Some(Sign::Zero),
            reversible: true,
            closed: false,
            cartan_hadamard: true,
            injectivity: f64::INFINITY,
            backward_injectivity: f64::INFINITY,
        };
        match self {
            ModelSpace::Euclidean { .. } => flat,
            ModelSpace::Minkowski { metric } => Certificates {
                reversible: metric.is_reversible(),
                ..flat
            },
            // S(y) = ⟨y, x⟩: t|y|² along rays from o, negative along rays into o.
            ModelSpace::Gaussian { .. } => Certificates {
                ric_infinity_lower: Some(1.0),
                ric_n_lower: None,
                s_lower: None,
                s_from_o: Some(Sign::NonNegative),
                s_to_o: Some(Sign::NonPositive),
                ..flat
            },
            ModelSpace::Hyperbolic { .. } => Certificates {
                flag_upper: Some(-1.0),
                flag_lower: Some(-1.0),
                ricci_lower: Some(-(n - 1.0)),
                ric_infinity_lower: Some(-(n - 1.0)),
                ric_n_lower: Some((n, -(n - 1.0))),
                ..flat
            },
            ModelSpace::Sphere { .. } => Certificates {
                flag_upper: Some(1.0),
                flag_lower: Some(1.0),
                ricci_lower: Some(n - 1.0),
                ric_infinity_lower: Some(n - 1.0),
                ric_n_lower: Some((n, n - 1.0)),
                closed: true,
                cartan_hadamard: false,
                injectivity: PI,
                backward_injectivity: PI,
                ..flat
            },
            // K = -1/4 and S = (n+1)/2·F; Ric_∞ = Ric since S is constant
            // along unit-speed geodesics.
            ModelSpace::Funk { .. } => Certificates {
                flag_upper: Some(-0.25),
                flag_lower: Some(-0.25),
                ricci_lower: Some(-(n - 1.0) / 4.0),
                ric_infinity_lower: Some(-(n - 1.0) / 4.0),
                ric_n_lower: None,
                s_lower: Some(0.5 * (n + 1.0)),
                s_from_o: Some(Sign::NonNegative),
                s_to_o: Some(Sign::NonNegative),
                reversible: false,
                backward_injectivity: 2f64.ln(),
                ..flat
            },
        }
    }

    /// `r₊(x) = d(o, x)` or `r₋(x) = d(x, o)` in closed form.
    pub fn radius<T: Real>(&self, x: &[T], side: Side) -> T {
        let rho = || linalg::dot(x, x).sqrt();
        match self {
            ModelSpace::Euclidean { .. } | ModelSpace::Gaussian { .. } => rho(),
            ModelSpace::Minkowski { metric } => {
                let o: Vec<T> = vec![T::zero(); x.len()];
                match side {
                    Side::Forward => metric.norm(&o, x),
                    Side::Backward => {
                        let m: Vec<T> = x.iter().map(|v| -*v).collect();
                        metric.norm(&o, &m)
                    }
                }
            }
            ModelSpace::Hyperbolic { .. } => rho().atanh() * 2.0,
            ModelSpace::Sphere { .. } => rho().atan() * 2.0,
            ModelSpace::Funk { .. } => match side {
                Side::Forward => -((-rho() + 1.0).ln()),
                Side::Backward => (rho() + 1.0).ln(),
            },
        }
    }

    /// Coordinate radius `ρ` along the unit coordinate direction `u` with
    /// `radius(ρu) = r`; `None` when `r` is not attained inside the chart.
    pub fn ray_param(&self, u: &[f64], r: f64, side: Side) -> Option<f64> {
        if r < 0.0 {
            return None;
        }
        let rho = match self {
            ModelSpace::Euclidean { .. } | ModelSpace::Gaussian { .. } => r,
            ModelSpace::Minkowski { metric } => {
                let o = vec![0.0; u.len()];
                let f = match side {
                    Side::Forward => metric.norm(&o, u),
                    Side::Backward => {
                        let m: Vec<f64> = u.iter().map(|v| -v).collect();
                        metric.norm(&o, &m)
                    }
                };
                r / f
            }
            ModelSpace::Hyperbolic { .. } => (0.5 * r).tanh(),
            ModelSpace::Sphere { .. } => {
                if r >= PI {
                    return None;
                }
                (0.5 * r).tan()
            }
            ModelSpace::Funk { .. } => match side {
                Side::Forward => -(-r).exp_m1(),
                Side::Backward => {
                    if r >= 2f64.ln() {
                        return None;
                    }
                    r.exp_m1()
                }
            },
        };
        rho.is_finite().then_some(rho)
    }

    /// Largest usable coordinate radius of the chart.
    pub fn chart_limit(&self) -> f64 {
        match self {
            ModelSpace::Hyperbolic { .. } => 1.0,
            ModelSpace::Funk { .. } => FUNK_TRUNCATION,
            ModelSpace::Sphere { .. } => (0.5 * (PI - SPHERE_CAP)).tan(),
            _ => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagSample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub curvature: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagTable {
    pub model: String,
    pub seed: u64,
    /// Certified range `[flag_lower, flag_upper]`, when known.
    pub expected: (Option<f64>, Option<f64>),
    pub samples: Vec<FlagSample>,
    /// Largest distance of a sample from the certified range.
    pub worst_deviation: f64,
}

/// Flag curvature at random flags. Base points are uniform in the ball of
/// coordinate radius `min(0.9·chart, 2)`; directions are Gaussian.
pub fn sample_flags(model: &ModelSpace, count: usize, seed: u64) -> Result<FlagTable> {
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    model.validate()?;
    let spec = model.metric();
    let n = model.dim();
    let reach = (0.9 * model.chart_limit()).min(2.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
    let c = model.certificates();
    let mut samples = Vec::with_capacity(count);
    let mut worst: f64 = 0.0;
    while samples.len() < count {
        let dir = gauss(&mut rng);
        let len = linalg::norm2(&dir);
        let rad = reach * rng.gen::<f64>().powf(1.0 / n as f64);
        let x: Vec<f64> = dir.iter().map(|a| a * rad / len).collect();
        let y = gauss(&mut rng);
        let v = gauss(&mut rng);
        let k = match crate::calculus::flag_curvature(&spec, &x, &y, &v) {
            Err(Error::DegenerateFlag { .. }) => continue,
            other => other?,
        };
        let below = c.flag_lower.map_or(0.0, |lo| (lo - k).max(0.0));
        let above = c.flag_upper.map_or(0.0, |hi| (k - hi).max(0.0));
        worst = worst.max(below).max(above);
        samples.push(FlagSample { x, y, v, curvature: k });
    }
    Ok(FlagTable {
        model: model.name().to_string(),
        seed,
        expected: (c.flag_lower, c.flag_upper),
        samples,
        worst_deviation: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesics::distance;

    #[test]
    fn radius_matches_distance() {
        let models = [
            ModelSpace::Hyperbolic { dim: 2 },
            ModelSpace::Sphere { dim: 2 },
            ModelSpace::Funk { dim: 2 },
            ModelSpace::Minkowski {
                metric: MetricSpec::Randers { b: vec![0.3, -0.2] },
            },
        ];
        let x = [0.3, 0.4];
        for m in &models {
            let spec = m.metric();
            let o = m.origin();
            let fwd = distance(&spec, &o, &x).unwrap();
            let bwd = distance(&spec, &x, &o).unwrap();
            assert!((m.radius(&x, Side::Forward) - fwd).abs() < 1e-12, "{}", m.name());
            assert!((m.radius(&x, Side::Backward) - bwd).abs() < 1e-12, "{}", m.name());
        }
    }

    #[test]
    fn ray_param_inverts_radius() {
        let m = ModelSpace::Funk { dim: 2 };
        let u = [0.6, 0.8];
        for side in [Side::Forward, Side::Backward] {
            let rho = m.ray_param(&u, 0.5, side).unwrap();
            let x = [rho * u[0], rho * u[1]];
            assert!((m.radius(&x, side) - 0.5).abs() < 1e-14);
        }
        assert!(m.ray_param(&u, 0.7, Side::Backward).is_none());
    }
}
