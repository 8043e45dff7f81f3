//! Polar product quadrature centered at the base point.
//!
//! Each ray is split at the registered breakpoints. A segment touching the
//! origin is graded logarithmically down to `R_MIN_RELATIVE` of its length and
//! the remaining sliver is integrated as a fitted power law; infinite and
//! singular-right segments are treated the same way. Angular rules are the
//! periodic trapezoid (n = 2) and Gauss–Legendre in `cos ϑ` times trapezoid in
//! `φ` (n = 3).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::sum::NeumaierSum;

/// Innermost graded radius, relative to the first segment.
pub const R_MIN_RELATIVE: f64 = 1e-9;
/// Largest `log(b/ρ)` reached by the logarithmic origin grading.
const LOG_DEPTH: f64 = 230.0;
const GL_ORDER: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Starting refinement level.
    pub level: u32,
    /// Highest level tried before declaring non-convergence.
    pub max_level: u32,
    /// Relative tolerance between successive levels.
    pub rtol: f64,
    /// Absolute floor of the convergence test, for signed integrals.
    #[serde(default)]
    pub atol: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            level: 1,
            max_level: 4,
            rtol: 1e-6,
            atol: 0.0,
        }
    }
}

impl Budget {
    pub fn at_level(level: u32) -> Self {
        Budget {
            level,
            max_level: level + 3,
            ..Budget::default()
        }
    }
}

/// Behavior of the integrand at `ρ = 0` when a ray starts there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Origin {
    /// Integrable power law in `ρ`.
    Power,
    /// Power law in `log(scale/ρ)`, as for logarithmic weights.
    Log { scale: f64 },
    /// Smooth; plain Gauss–Legendre panels.
    Regular,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RayEnd {
    Finite(f64),
    /// Finite end with an integrable power singularity.
    Singular(f64),
    Infinite,
    /// Chart truncation at `at`; the part up to `limit` (possibly infinite)
    /// is estimated and reported, never added.
    Truncated { at: f64, limit: f64 },
}

impl RayEnd {
    pub fn position(&self) -> f64 {
        match *self {
            RayEnd::Finite(b) | RayEnd::Singular(b) => b,
            RayEnd::Truncated { at, .. } => at,
            RayEnd::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayPlan {
    pub start: f64,
    pub end: RayEnd,
    /// Interior breakpoints; values outside `(start, end)` are ignored.
    pub breakpoints: Vec<f64>,
    pub origin: Origin,
}

impl RayPlan {
    /// A ray contributing nothing.
    pub fn empty() -> Self {
        RayPlan {
            start: 0.0,
            end: RayEnd::Finite(0.0),
            breakpoints: Vec::new(),
            origin: Origin::Regular,
        }
    }

    fn is_empty(&self) -> bool {
        !(self.end.position() > self.start)
    }
}

#[derive(Clone, Debug)]
pub struct AngularRule {
    pub directions: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Angular rule at a refinement level.
pub fn angular_rule(n: usize, level: u32) -> Result<AngularRule> {
    let scale = 1usize << level;
    match n {
        2 => {
            let m = 16 * scale;
            let h = 2.0 * PI / m as f64;
            let directions = (0..m)
                .map(|j| {
                    let t = (j as f64 + 0.5) * h;
                    vec![t.cos(), t.sin()]
                })
                .collect();
            Ok(AngularRule {
                directions,
                weights: vec![h; m],
            })
        }
        3 => {
            let m = 6 * scale;
            let gl = GaussLegendre::new(m);
            let k = 2 * m;
            let h = 2.0 * PI / k as f64;
            let mut directions = Vec::with_capacity(m * k);
            let mut weights = Vec::with_capacity(m * k);
            for (&z, &w) in gl.nodes.iter().zip(&gl.weights) {
                let s = (1.0 - z * z).sqrt();
                for j in 0..k {
                    let t = (j as f64 + 0.5) * h;
                    directions.push(vec![s * t.cos(), s * t.sin(), z]);
                    weights.push(w * h);
                }
            }
            Ok(AngularRule { directions, weights })
        }
        _ => Err(Error::Invalid(format!(
            "polar quadrature supports n = 2 and n = 3, got n = {n}"
        ))),
    }
}

/// One refinement level of an integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelValue {
    pub level: u32,
    pub rays: usize,
    pub evaluations: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Integral<const K: usize> {
    pub value: [f64; K],
    /// Difference between the last two levels.
    pub error: [f64; K],
    /// Estimated mass beyond chart truncations (not included in `value`).
    pub truncation: [Option<f64>; K],
    pub trace: Vec<LevelValue>,
}

struct Acc<const K: usize> {
    sums: [NeumaierSum; K],
    evaluations: usize,
}

impl<const K: usize> Acc<K> {
    fn new() -> Self {
        Acc {
            sums: [NeumaierSum::new(); K],
            evaluations: 0,
        }
    }

    fn add(&mut self, w: f64, v: &[f64; K]) {
        for (s, x) in self.sums.iter_mut().zip(v) {
            s.add(w * x);
        }
    }

    fn add_plain(&mut self, v: &[f64; K]) {
        self.add(1.0, v);
    }

    fn totals(&self) -> [f64; K] {
        let mut out = [0.0; K];
        for (o, s) in out.iter_mut().zip(&self.sums) {
            *o = s.total();
        }
        out
    }
}

struct Ray<'a, const K: usize, F> {
    f: &'a F,
    dir: &'a [f64],
    n: usize,
    gl: &'a GaussLegendre,
    pieces: usize,
}

impl<'a, const K: usize, F> Ray<'a, K, F>
where
    F: Fn(&[f64]) -> Result<[f64; K]>,
{
    /// Radial integrand `f(ρu) ρ^{n-1}`.
    fn g(&self, rho: f64) -> Result<[f64; K]> {
        let x: Vec<f64> = self.dir.iter().map(|u| rho * u).collect();
        let mut v = (self.f)(&x)?;
        let jac = rho.powi(self.n as i32 - 1);
        for a in v.iter_mut() {
            *a *= jac;
            if !a.is_finite() {
                return Err(Error::numerical(
                    "non-finite integrand",
                    format!("ρ = {rho:e} along {:?}", self.dir),
                ));
            }
        }
        Ok(v)
    }

    /// `∫ g(ρ(t)) ρ'(t) dt` over `[t0, t1]` in `pieces` equal panels.
    fn mapped<M>(&self, acc: &mut Acc<K>, t0: f64, t1: f64, pieces: usize, map: M) -> Result<()>
    where
        M: Fn(f64) -> (f64, f64),
    {
        let h = (t1 - t0) / pieces as f64;
        for k in 0..pieces {
            let a = t0 + k as f64 * h;
            for (t, w) in self.gl.on(a, a + h) {
                let (rho, jac) = map(t);
                let v = self.g(rho)?;
                acc.add(w * jac, &v);
                acc.evaluations += 1;
            }
        }
        Ok(())
    }

    fn graded_edges(depth: f64) -> Vec<f64> {
        let mut e = vec![0.0];
        let mut w = 1.0;
        while w < depth {
            e.push(w);
            w *= 2.0;
        }
        e.push(depth);
        e
    }

    fn plain(&self, acc: &mut Acc<K>, a: f64, b: f64) -> Result<()> {
        if a > 0.0 && b > 2.0 * a {
            let mut lo = a;
            while lo < b {
                let hi = (2.0 * lo).min(b);
                let hi = if b / hi < 1.25 { b } else { hi };
                self.mapped(acc, lo, hi, self.pieces, |t| (t, 1.0))?;
                lo = hi;
            }
            Ok(())
        } else {
            self.mapped(acc, a, b, 2 * self.pieces, |t| (t, 1.0))
        }
    }

    /// Segment `[0, b]` with a power-law origin.
    fn origin_power(&self, acc: &mut Acc<K>, b: f64) -> Result<()> {
        let depth = -R_MIN_RELATIVE.ln();
        let edges = Self::graded_edges(depth);
        for win in edges.windows(2) {
            // ρ = b e^{-w}
            self.mapped(acc, win[0], win[1], self.pieces, |w| {
                let r = b * (-w).exp();
                (r, r)
            })?;
        }
        let d = b * R_MIN_RELATIVE;
        let g1 = self.g(d)?;
        let g2 = self.g(d / std::f64::consts::E)?;
        acc.evaluations += 2;
        let mut tail = [0.0; K];
        for k in 0..K {
            tail[k] = power_tail_near(g1[k], g2[k], d, "origin")?;
        }
        acc.add_plain(&tail);
        Ok(())
    }

    /// Segment `[0, b]` where the integrand is a power of `log(scale/ρ)`.
    fn origin_log(&self, acc: &mut Acc<K>, b: f64, scale: f64) -> Result<()> {
        let edges = Self::graded_edges(LOG_DEPTH);
        for win in edges.windows(2) {
            self.mapped(acc, win[0], win[1], self.pieces, |q| {
                let r = b * (-q).exp();
                (r, r)
            })?;
        }
        // H = g(ρ)ρ fitted as C L^e in L = log(scale/ρ) beyond q = LOG_DEPTH
        let shift = (scale / b).ln().max(0.0);
        let l1 = LOG_DEPTH + shift;
        let l0 = l1 * (-0.125f64).exp();
        let (r1, r0) = (b * (-LOG_DEPTH).exp(), b * (shift - l0).exp());
        let h1 = self.g(r1)?;
        let h0 = self.g(r0)?;
        acc.evaluations += 2;
        let mut tail = [0.0; K];
        for k in 0..K {
            tail[k] = power_tail_far(h1[k] * r1, h0[k] * r0, l1, 0.125, "logarithmic origin")?;
        }
        acc.add_plain(&tail);
        Ok(())
    }

    /// Segment `[a, b]` singular at `b`.
    fn singular_right(&self, acc: &mut Acc<K>, a: f64, b: f64) -> Result<()> {
        let len = b - a;
        let depth = -R_MIN_RELATIVE.ln();
        let edges = Self::graded_edges(depth);
        for win in edges.windows(2) {
            self.mapped(acc, win[0], win[1], self.pieces, |w| {
                let d = len * (-w).exp();
                (b - d, d)
            })?;
        }
        let d = len * R_MIN_RELATIVE;
        let g1 = self.g(b - d)?;
        let g2 = self.g(b - d / std::f64::consts::E)?;
        acc.evaluations += 2;
        let mut tail = [0.0; K];
        for k in 0..K {
            tail[k] = power_tail_near(g1[k], g2[k], d, "singular end")?;
        }
        acc.add_plain(&tail);
        Ok(())
    }

    fn infinite(&self, acc: &mut Acc<K>, a: f64) -> Result<()> {
        let depth = -R_MIN_RELATIVE.ln();
        let edges = Self::graded_edges(depth);
        for win in edges.windows(2) {
            self.mapped(acc, win[0], win[1], self.pieces, |w| {
                let r = a * w.exp();
                (r, r)
            })?;
        }
        let big = a / R_MIN_RELATIVE;
        let g1 = self.g(big)?;
        let g0 = self.g(big / std::f64::consts::E)?;
        acc.evaluations += 2;
        let mut tail = [0.0; K];
        for k in 0..K {
            tail[k] = power_tail_far(g1[k], g0[k], big, 1.0, "infinite end")?;
        }
        acc.add_plain(&tail);
        Ok(())
    }

    /// Estimate of the mass between a truncation and the chart limit.
    fn truncation(&self, at: f64, limit: f64) -> Result<[Option<f64>; K]> {
        let mut out = [None; K];
        if limit.is_infinite() {
            let g1 = self.g(at)?;
            let g0 = self.g(at * (-0.125f64).exp())?;
            for k in 0..K {
                out[k] = power_tail_far(g1[k], g0[k], at, 0.125, "truncation").ok();
            }
        } else {
            let d = limit - at;
            let g1 = self.g(at)?;
            let g2 = self.g(limit - d * 0.125f64.exp())?;
            for k in 0..K {
                // fitted with the farther point playing the role of d/e^{-1/8}
                out[k] = power_tail_near_ratio(g1[k], g2[k], d, 0.125f64.exp(), "truncation").ok();
            }
        }
        Ok(out)
    }

    fn integrate(&self, plan: &RayPlan) -> Result<([f64; K], [Option<f64>; K], usize)> {
        let mut acc = Acc::<K>::new();
        let mut trunc = [Some(0.0); K];
        if plan.is_empty() {
            return Ok(([0.0; K], trunc, 0));
        }
        let end = plan.end.position();
        let mut pts = vec![plan.start];
        let mut inner: Vec<f64> = plan
            .breakpoints
            .iter()
            .copied()
            .filter(|&b| b > plan.start * (1.0 + 1e-12) && b < end * (1.0 - 1e-12))
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1e-300));
        pts.extend(inner);
        let special_start = plan.start == 0.0 && plan.origin != Origin::Regular;
        let special_end = matches!(plan.end, RayEnd::Singular(_));
        if pts.len() == 1 && special_start && special_end {
            pts.push(0.5 * end);
        }
        if !matches!(plan.end, RayEnd::Infinite) {
            pts.push(end);
        }
        let last = pts.len() - 1;
        for i in 0..pts.len() {
            let a = pts[i];
            let is_first = i == 0;
            if i == last {
                if let RayEnd::Infinite = plan.end {
                    if is_first && special_start {
                        // split so the origin and the infinite tail are graded separately
                        let mid = if a > 0.0 { a } else { 1.0 };
                        self.origin_segment(&mut acc, plan.origin, mid)?;
                        self.infinite(&mut acc, mid)?;
                    } else {
                        self.infinite(&mut acc, a.max(f64::MIN_POSITIVE))?;
                    }
                }
                break;
            }
            let b = pts[i + 1];
            let right_singular = special_end && i + 1 == last;
            if is_first && special_start {
                self.origin_segment(&mut acc, plan.origin, b)?;
            } else if right_singular {
                self.singular_right(&mut acc, a, b)?;
            } else {
                self.plain(&mut acc, a, b)?;
            }
        }
        if let RayEnd::Truncated { at, limit } = plan.end {
            trunc = self.truncation(at, limit)?;
        }
        Ok((acc.totals(), trunc, acc.evaluations))
    }

    fn origin_segment(&self, acc: &mut Acc<K>, origin: Origin, b: f64) -> Result<()> {
        match origin {
            Origin::Power => self.origin_power(acc, b),
            Origin::Log { scale } => self.origin_log(acc, b, scale),
            Origin::Regular => self.plain(acc, 0.0, b),
        }
    }
}

/// `∫₀^d C t^e dt` from `g(d) = g1` and `g(d/e) = g2`.
fn power_tail_near(g1: f64, g2: f64, d: f64, what: &str) -> Result<f64> {
    power_tail_near_ratio(g1, g2, d, std::f64::consts::E.recip(), what)
}

/// As [`power_tail_near`] with `g(d·ratio) = g2`.
fn power_tail_near_ratio(g1: f64, g2: f64, d: f64, ratio: f64, what: &str) -> Result<f64> {
    if g1 == 0.0 {
        return Ok(0.0);
    }
    let e = fitted_exponent(g1, g2, ratio).ok_or_else(|| {
        Error::numerical(
            format!("power-law fit failed at the {what}"),
            format!("g(d) = {g1:e}, g(d·{ratio}) = {g2:e}"),
        )
    })?;
    if e <= -1.0 {
        return Err(Error::numerical(
            format!("non-integrable power at the {what}"),
            format!("fitted exponent {e}"),
        ));
    }
    Ok(d * g1 / (e + 1.0))
}

/// `∫_B^∞ C t^e dt` from `g(B) = g1` and `g(B e^{-step}) = g0`.
fn power_tail_far(g1: f64, g0: f64, big: f64, step: f64, what: &str) -> Result<f64> {
    if g1 == 0.0 {
        return Ok(0.0);
    }
    let e = fitted_exponent(g1, g0, (-step).exp()).ok_or_else(|| {
        Error::numerical(
            format!("power-law fit failed at the {what}"),
            format!("g(B) = {g1:e}, g(B e^-{step}) = {g0:e}"),
        )
    })?;
    if e >= -1.0 {
        return Err(Error::numerical(
            format!("non-integrable decay at the {what}"),
            format!("fitted exponent {e} at B = {big:e}"),
        ));
    }
    Ok(-big * g1 / (e + 1.0))
}

/// Exponent `e` with `g(t·ratio)/g(t) = ratio^e`.
fn fitted_exponent(g_t: f64, g_scaled: f64, ratio: f64) -> Option<f64> {
    if g_scaled == 0.0 || g_t.signum() != g_scaled.signum() {
        return None;
    }
    let e = (g_scaled / g_t).ln() / ratio.ln();
    e.is_finite().then_some(e)
}

/// One pass over all rays at a fixed level.
pub fn integrate_level<const K: usize, F, P>(n: usize, level: u32, f: &F, plan: &P) -> Result<(LevelValue, [Option<f64>; K])>
where
    F: Fn(&[f64]) -> Result<[f64; K]> + Sync,
    P: Fn(&[f64]) -> Result<RayPlan> + Sync,
{
    let rule = angular_rule(n, level)?;
    let gl = GaussLegendre::new(GL_ORDER);
    // radial panels refine every other level; angular error dominates
    let pieces = 1usize << ((level + 1) / 2);
    let rows: Vec<([f64; K], [Option<f64>; K], usize)> = rule
        .directions
        .par_iter()
        .map(|dir| {
            let p = plan(dir)?;
            Ray {
                f,
                dir,
                n,
                gl: &gl,
                pieces,
            }
            .integrate(&p)
        })
        .collect::<Result<_>>()?;
    let mut acc = Acc::<K>::new();
    let mut trunc = [NeumaierSum::new(); K];
    let mut trunc_ok = [true; K];
    let mut evaluations = 0;
    for ((v, t, e), w) in rows.iter().zip(&rule.weights) {
        acc.add(*w, v);
        evaluations += e;
        for k in 0..K {
            match t[k] {
                Some(x) => trunc[k].add(w * x),
                None => trunc_ok[k] = false,
            }
        }
    }
    let mut tr = [None; K];
    for k in 0..K {
        if trunc_ok[k] {
            tr[k] = Some(trunc[k].total());
        }
    }
    Ok((
        LevelValue {
            level,
            rays: rule.directions.len(),
            evaluations,
            values: acc.totals().to_vec(),
        },
        tr,
    ))
}

/// Integral of `f dx` over the region described ray by ray by `plan`, with
/// two-level refinement until every component agrees to `budget`.
///
/// `f` must already include the measure density.
pub fn integrate<const K: usize, F, P>(n: usize, f: &F, plan: &P, budget: &Budget) -> Result<Integral<K>>
where
    F: Fn(&[f64]) -> Result<[f64; K]> + Sync,
    P: Fn(&[f64]) -> Result<RayPlan> + Sync,
{
    let mut trace = Vec::new();
    let (first, _) = integrate_level(n, budget.level, f, plan)?;
    trace.push(first);
    let mut level = budget.level;
    loop {
        level += 1;
        let (next, trunc) = integrate_level(n, level, f, plan)?;
        let prev = &trace[trace.len() - 1].values;
        let mut value = [0.0; K];
        let mut error = [0.0; K];
        let mut ok = true;
        for k in 0..K {
            value[k] = next.values[k];
            error[k] = (next.values[k] - prev[k]).abs();
            if error[k] > budget.rtol * value[k].abs() + budget.atol {
                ok = false;
            }
        }
        trace.push(next);
        if ok {
            return Ok(Integral {
                value,
                error,
                truncation: trunc,
                trace,
            });
        }
        if level >= budget.max_level {
            let rows: Vec<String> = trace.iter().map(|t| format!("level {}: {:?}", t.level, t.values)).collect();
            return Err(Error::numerical("quadrature refinement did not converge", rows.join("; ")));
        }
    }
}
