//! Test functions: the radial extremal, cut-off and logarithmic families and
//! seeded batteries of smooth bumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::sphere_directions;
use crate::models::{ModelSpace, Side};
use crate::real::{basis, seed};

/// Where a test function can be nonzero along one ray, in coordinate radius.
#[derive(Clone, Debug, PartialEq)]
pub enum Support {
    Everywhere,
    Interval(f64, f64),
    Empty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayShape {
    pub support: Support,
    /// Coordinate radii where the function is not smooth.
    pub breaks: Vec<f64>,
}

pub trait TestFunction: Sync {
    fn label(&self) -> String;
    /// `(u(x), du(x))`.
    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)>;
    /// Support and breakpoints along the unit coordinate direction `dir`.
    fn ray(&self, dir: &[f64]) -> RayShape;
    /// Known to be `≥ 0` everywhere.
    fn is_nonnegative(&self) -> bool {
        false
    }
}

/// Distance from the base point and its differential.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialContext {
    pub model: ModelSpace,
    pub side: Side,
}

impl RadialContext {
    pub fn new(model: ModelSpace, side: Side) -> Self {
        RadialContext { model, side }
    }

    pub fn radius(&self, x: &[f64]) -> f64 {
        self.model.radius(x, self.side)
    }

    /// `(r, dr)`; `dr` is undefined at `o`.
    pub fn radius_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = x.len();
        let r = self.radius(x);
        if r == 0.0 {
            return Err(Error::Domain("dr at the base point".into()));
        }
        let dr: Vec<f64> = (0..n)
            .map(|i| self.model.radius(&seed(x, &basis::<f64>(n, i)), self.side).du)
            .collect();
        Ok((r, dr))
    }

    /// Coordinate radius along `dir` where the distance equals `r`.
    pub fn coordinate(&self, dir: &[f64], r: f64) -> Option<f64> {
        self.model.ray_param(dir, r, self.side)
    }
}

/// Profile `φ(r)` of a radial test function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `(r/s)^{c_in}` on `r < s`, `(r/s)^{-c_out}` beyond.
    Extremal { c_in: f64, c_out: f64, s: f64 },
    /// `S(r)·max{ε, r}^{-θ}` with the quintic smoothstep `S`, `1` on
    /// `r ≤ R/2` and `0` on `r ≥ R`.
    Cutoff { theta: f64, epsilon: f64, radius: f64 },
    /// With `ρ = log(R/r)`, `s = log 2`: `(ρ/s)^{-c_in}` on `r < R/2`,
    /// `(ρ/s)^{c_out}` on `R/2 ≤ r < R`.
    Log { c_in: f64, c_out: f64, radius: f64 },
}

pub fn smoothstep(t: f64) -> (f64, f64) {
    if t <= 0.0 {
        return (1.0, 0.0);
    }
    if t >= 1.0 {
        return (0.0, 0.0);
    }
    let t2 = t * t;
    let v = 1.0 - t2 * t * (10.0 - 15.0 * t + 6.0 * t2);
    let dv = -30.0 * t2 * (1.0 - t) * (1.0 - t);
    (v, dv)
}

impl Profile {
    /// Extremal of the power-weight inequality with constant `(|n+β|/p)^p`.
    pub fn extremal(n: f64, p: f64, beta: f64, delta: f64, s: f64) -> Self {
        let c = |d: f64| ((n + beta).abs() + d) / p;
        Profile::Extremal {
            c_in: c(delta),
            c_out: c(0.5 * delta),
            s,
        }
    }

    pub fn cutoff(n: f64, p: f64, beta: f64, epsilon: f64, radius: f64) -> Self {
        Profile::Cutoff {
            theta: (n + beta) / p,
            epsilon,
            radius,
        }
    }

    /// Logarithmic family: `c_in` uses `δ/2` and `c_out` uses `δ`.
    pub fn log(p: f64, beta: f64, delta: f64, radius: f64) -> Self {
        let c = |d: f64| ((beta + 1.0).abs() + d) / p;
        Profile::Log {
            c_in: c(0.5 * delta),
            c_out: c(delta),
            radius,
        }
    }

    /// `(φ(r), φ'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        match *self {
            Profile::Extremal { c_in, c_out, s } => {
                let q = r / s;
                if r < s {
                    (q.powf(c_in), c_in * q.powf(c_in - 1.0) / s)
                } else {
                    (q.powf(-c_out), -c_out * q.powf(-c_out - 1.0) / s)
                }
            }
            Profile::Cutoff { theta, epsilon, radius } => {
                let h = 0.5 * radius;
                let (sv, sd) = smoothstep((r - h) / h);
                if r < epsilon {
                    (sv * epsilon.powf(-theta), sd / h * epsilon.powf(-theta))
                } else {
                    let m = r.powf(-theta);
                    (sv * m, sd / h * m - theta * sv * m / r)
                }
            }
            Profile::Log { c_in, c_out, radius } => {
                if r >= radius {
                    return (0.0, 0.0);
                }
                let s = std::f64::consts::LN_2;
                let q = (radius / r).ln() / s;
                // dq/dr = -1/(s r)
                if r < 0.5 * radius {
                    (q.powf(-c_in), c_in * q.powf(-c_in - 1.0) / (s * r))
                } else {
                    (q.powf(c_out), -c_out * q.powf(c_out - 1.0) / (s * r))
                }
            }
        }
    }

    /// Distances where the profile is not smooth.
    pub fn breaks(&self) -> Vec<f64> {
        match *self {
            Profile::Extremal { s, .. } => vec![s],
            Profile::Cutoff { epsilon, radius, .. } => vec![epsilon, 0.5 * radius, radius],
            Profile::Log { radius, .. } => vec![0.5 * radius, radius],
        }
    }

    /// Outer end of the support in distance, if bounded.
    pub fn outer(&self) -> Option<f64> {
        match *self {
            Profile::Extremal { .. } => None,
            Profile::Cutoff { radius, .. } | Profile::Log { radius, .. } => Some(radius),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Radial {
    pub ctx: RadialContext,
    pub profile: Profile,
}

impl TestFunction for Radial {
    fn label(&self) -> String {
        match self.profile {
            Profile::Extremal { c_in, s, .. } => format!("extremal(c={c_in:.6}, s={s})"),
            Profile::Cutoff { epsilon, radius, .. } => format!("cutoff(eps={epsilon:e}, R={radius})"),
            Profile::Log { c_out, radius, .. } => format!("log(c={c_out:.6}, R={radius})"),
        }
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (r, dr) = self.ctx.radius_gradient(x)?;
        let (v, dv) = self.profile.eval(r);
        Ok((v, dr.iter().map(|a| dv * a).collect()))
    }

    fn is_nonnegative(&self) -> bool {
        true
    }

    fn ray(&self, dir: &[f64]) -> RayShape {
        let breaks = self
            .profile
            .breaks()
            .into_iter()
            .filter_map(|r| self.ctx.coordinate(dir, r))
            .collect();
        let support = match self.profile.outer() {
            None => Support::Everywhere,
            Some(r) => match self.ctx.coordinate(dir, r) {
                Some(rho) => Support::Interval(0.0, rho),
                None => Support::Everywhere,
            },
        };
        RayShape { support, breaks }
    }
}

/// `ψ(|x − center|/radius)` with `ψ(t) = exp(−1/(1−t²))` on `|t| < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    fn eval(&self, x: &[f64], du: &mut [f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let t2 = linalg::dot(&d, &d) / (self.radius * self.radius);
        if t2 >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - t2;
        let v = self.amplitude * (-1.0 / w).exp();
        // dψ/d(t²) = -ψ/w², d(t²)/dx = 2d/radius²
        let k = -v / (w * w) * 2.0 / (self.radius * self.radius);
        for (g, di) in du.iter_mut().zip(&d) {
            *g += k * di;
        }
        v
    }

    /// Coordinate radii where the ray along `dir` crosses the bump boundary.
    fn crossings(&self, dir: &[f64]) -> Option<(f64, f64)> {
        let uc = linalg::dot(dir, &self.center);
        let disc = uc * uc - linalg::dot(&self.center, &self.center) + self.radius * self.radius;
        if disc <= 0.0 {
            return None;
        }
        let h = disc.sqrt();
        let (a, b) = (uc - h, uc + h);
        (b > 0.0).then_some((a.max(0.0), b))
    }

    fn contains(&self, x: &[f64]) -> bool {
        let d: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        linalg::dot(&d, &d) < self.radius * self.radius
    }
}

/// Sum of bumps, optionally shifted so that `u(o) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub bumps: Vec<Bump>,
    /// Constant added everywhere.
    pub offset: f64,
    pub label: String,
}

impl BumpFunction {
    pub fn new(bumps: Vec<Bump>, label: impl Into<String>) -> Self {
        BumpFunction {
            bumps,
            offset: 0.0,
            label: label.into(),
        }
    }

    /// Subtract the value at the origin.
    pub fn vanishing_at_origin(mut self) -> Self {
        let n = self.bumps.first().map_or(0, |b| b.center.len());
        let o = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let v0: f64 = self.bumps.iter().map(|b| b.eval(&o, &mut scratch)).sum();
        self.offset = -v0;
        self
    }

    /// Some bump covers the origin.
    pub fn touches_origin(&self) -> bool {
        self.bumps.iter().any(|b| b.contains(&vec![0.0; b.center.len()]))
    }

    /// Largest coordinate radius of the support.
    pub fn reach(&self) -> f64 {
        self.bumps
            .iter()
            .map(|b| linalg::norm2(&b.center) + b.radius)
            .fold(0.0, f64::max)
    }
}

impl TestFunction for BumpFunction {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn is_nonnegative(&self) -> bool {
        self.offset >= 0.0 && self.bumps.iter().all(|b| b.amplitude >= 0.0)
    }

    fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut du = vec![0.0; x.len()];
        let mut u = self.offset;
        for b in &self.bumps {
            u += b.eval(x, &mut du);
        }
        Ok((u, du))
    }

    fn ray(&self, dir: &[f64]) -> RayShape {
        let mut breaks = Vec::new();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for b in &self.bumps {
            if let Some((a, c)) = b.crossings(dir) {
                if a > 0.0 {
                    breaks.push(a);
                }
                breaks.push(c);
                lo = lo.min(a);
                hi = hi.max(c);
            }
        }
        let support = if self.offset != 0.0 {
            Support::Everywhere
        } else if hi > lo {
            Support::Interval(lo, hi)
        } else {
            Support::Empty
        };
        RayShape { support, breaks }
    }
}

/// Where battery supports may lie, in coordinate radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryRegion {
    /// Supports stay outside this radius (`0` allows the origin).
    pub inner: f64,
    /// Supports stay inside this radius.
    pub outer: f64,
    /// Shift every member so that it vanishes at the origin.
    #[serde(default)]
    pub vanish_at_origin: bool,
}

/// Seeded battery of bump superpositions. Even-index members are
/// nonnegative; when the region admits the origin, odd members place their
/// first bump over it.
pub fn battery(n: usize, region: &BatteryRegion, seed_value: u64, count: usize) -> Result<Vec<BumpFunction>> {
    let BatteryRegion { inner, outer, vanish_at_origin } = *region;
    if !(outer > 0.0 && inner >= 0.0 && inner < outer) {
        return Err(Error::Invalid(format!("battery region [{inner}, {outer}] is empty")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
    let mut members = Vec::with_capacity(count);
    for k in 0..count {
        let nb = rng.gen_range(1..=3);
        let mut bumps = Vec::with_capacity(nb);
        for j in 0..nb {
            let amplitude = if k % 2 == 0 {
                rng.gen_range(0.5..2.0)
            } else {
                rng.gen_range(-2.0..2.0)
            };
            let bump = if inner == 0.0 && k % 2 == 1 && j == 0 {
                let radius = rng.gen_range(0.3..0.6) * outer;
                let off = rng.gen_range(0.0..0.3) * (outer - radius);
                let dir = &sphere_directions(n, 1, &mut rng)[0];
                Bump {
                    center: dir.iter().map(|a| a * off).collect(),
                    radius,
                    amplitude,
                }
            } else {
                let width = outer - inner;
                let radius = rng.gen_range(0.2..0.5) * width.min(outer);
                let radius = radius.min(0.45 * width);
                let dist = rng.gen_range(inner + radius..outer - radius);
                let dir = &sphere_directions(n, 1, &mut rng)[0];
                Bump {
                    center: dir.iter().map(|a| a * dist).collect(),
                    radius,
                    amplitude,
                }
            };
            bumps.push(bump);
        }
        let f = BumpFunction::new(bumps, format!("battery[{seed_value}:{k}]"));
        members.push(if vanish_at_origin { f.vanishing_at_origin() } else { f });
    }
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremal_is_continuous_at_s() {
        let p = Profile::extremal(3.0, 2.0, -2.0, 0.1, 0.5);
        let (a, _) = p.eval(0.5 * (1.0 - 1e-12));
        let (b, _) = p.eval(0.5);
        assert!((a - 1.0).abs() < 1e-10 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_profile_is_continuous_at_half_radius() {
        let p = Profile::log(2.0, -2.0, 0.0, 1.0);
        let (a, _) = p.eval(0.5 * (1.0 - 1e-12));
        let (b, _) = p.eval(0.5);
        assert!((a - 1.0).abs() < 1e-10 && (b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bump_derivative_matches_differences() {
        let f = BumpFunction::new(
            vec![Bump {
                center: vec![0.2, -0.1],
                radius: 0.5,
                amplitude: 1.3,
            }],
            "b",
        );
        let x = [0.3, 0.1];
        let (_, du) = f.eval(&x).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut a = x;
            let mut b = x;
            a[i] += h;
            b[i] -= h;
            let fd = (f.eval(&a).unwrap().0 - f.eval(&b).unwrap().0) / (2.0 * h);
            assert!((fd - du[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn battery_respects_region() {
        let region = BatteryRegion {
            inner: 0.2,
            outer: 1.0,
            vanish_at_origin: false,
        };
        for f in battery(3, &region, 11, 20).unwrap() {
            assert!(!f.touches_origin());
            assert!(f.reach() <= 1.0 + 1e-12);
            for b in &f.bumps {
                assert!(linalg::norm2(&b.center) - b.radius >= 0.2 - 1e-12);
            }
        }
    }
}
