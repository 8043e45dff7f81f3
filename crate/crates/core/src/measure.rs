//! Measures, distortion, S-curvature, weighted Ricci curvature and the polar
//! volume density along geodesics from a base point.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::calculus::{ricci, spray_generic};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geodesics::{integrate_geodesic_at, integrate_jacobi};
use crate::linalg;
use crate::metric::MetricSpec;
use crate::models::{ModelSpace, Side, Sign};
use crate::ode::OdeOptions;
use crate::real::{seed, Dual, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseMeasure {
    Lebesgue,
    BusemannHausdorff,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureSpec {
    Lebesgue,
    BusemannHausdorff,
    /// `e^{-f}` times the base density.
    Weighted { base: BaseMeasure, f: ScalarField },
}

/// Busemann–Hausdorff density on any scalar type. Closed forms for the
/// families that have one; `x`-independent norms without one use the
/// deterministic indicatrix quadrature.
pub fn bh_density_generic<T: Real>(spec: &MetricSpec, x: &[T]) -> Result<T> {
    let n = spec.dim();
    Ok(match spec {
        MetricSpec::Euclidean { .. } | MetricSpec::Funk { .. } => T::one(),
        MetricSpec::Riemannian { model, .. } => linalg::spd_det(&model.matrix(x), n)?.sqrt(),
        MetricSpec::Randers { b } => T::cst((1.0 - linalg::dot(b, b)).powf(0.5 * (n as f64 + 1.0))),
        // reflecting the indicatrix preserves its volume
        MetricSpec::Reverse { inner } => bh_density_generic(inner, x)?,
        MetricSpec::AlphaBeta { .. } | MetricSpec::FourthRoot { .. } => {
            if n > 3 {
                return Err(Error::Invalid(format!(
                    "Busemann–Hausdorff density of this family needs n ≤ 3, got {n}"
                )));
            }
            T::cst(crate::metric::bh_density_quadrature(spec, &vec![0.0; n]))
        }
    })
}

impl MeasureSpec {
    pub fn weighted(base: BaseMeasure, f: ScalarField) -> Self {
        MeasureSpec::Weighted { base, f }
    }

    /// `σ(x)` on any scalar type.
    pub fn density<T: Real>(&self, spec: &MetricSpec, x: &[T]) -> Result<T> {
        match self {
            MeasureSpec::Lebesgue => Ok(T::one()),
            MeasureSpec::BusemannHausdorff => bh_density_generic(spec, x),
            MeasureSpec::Weighted { base, f } => {
                let b = match base {
                    BaseMeasure::Lebesgue => T::one(),
                    BaseMeasure::BusemannHausdorff => bh_density_generic(spec, x)?,
                };
                Ok(b * (-f.eval(x)).exp())
            }
        }
    }

    pub fn density_at(&self, spec: &MetricSpec, x: &[f64]) -> Result<f64> {
        spec.check_point(x)?;
        let s = self.density(spec, x)?;
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Invalid(format!("measure density {s} at {x:?}")));
        }
        Ok(s)
    }
}

/// `τ(y) = log(√det g_y / σ)` on any scalar type.
pub fn distortion_generic<T: Real>(spec: &MetricSpec, measure: &MeasureSpec, x: &[T], y: &[T]) -> Result<T> {
    let n = y.len();
    let g = spec.fundamental_matrix(x, y);
    let det = linalg::spd_det(&g, n)?;
    Ok(det.ln() * 0.5 - measure.density(spec, x)?.ln())
}

pub fn distortion(spec: &MetricSpec, measure: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.fundamental_tensor(x, y)?;
    measure.density_at(spec, x)?;
    distortion_generic(spec, measure, x, y)
}

/// Step of the geodesic differencing in [`s_curvature`].
pub const S_STEP: f64 = 1e-3;
/// Step of the differencing of `S` in [`weighted_ricci`].
pub const DS_STEP: f64 = 1e-2;

fn stencil(fm2: f64, fm1: f64, fp1: f64, fp2: f64, h: f64) -> f64 {
    (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
}

/// States `(γ(t), γ̇(t))` at `t = −2h, −h, h, 2h`.
fn geodesic_stencil(spec: &MetricSpec, x: &[f64], y: &[f64], h: f64) -> Result<[(Vec<f64>, Vec<f64>); 4]> {
    let opts = OdeOptions::default();
    let back = integrate_geodesic_at(spec, x, y, &[-h, -2.0 * h], &opts)?;
    let fwd = integrate_geodesic_at(spec, x, y, &[h, 2.0 * h], &opts)?;
    if back.exited() || fwd.exited() || back.times.len() < 2 || fwd.times.len() < 2 {
        return Err(Error::Domain(format!("geodesic stencil leaves the chart at {x:?}")));
    }
    Ok([
        (back.points[1].clone(), back.velocities[1].clone()),
        (back.points[0].clone(), back.velocities[0].clone()),
        (fwd.points[0].clone(), fwd.velocities[0].clone()),
        (fwd.points[1].clone(), fwd.velocities[1].clone()),
    ])
}

/// `S(y) = d/dt τ(γ̇_y(t))|₀` by a fourth-order stencil at `±h, ±2h`
/// along the integrated geodesic.
pub fn s_curvature(spec: &MetricSpec, measure: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    distortion(spec, measure, x, y)?;
    let st = geodesic_stencil(spec, x, y, S_STEP)?;
    let mut tau = [0.0; 4];
    for (k, (p, v)) in st.iter().enumerate() {
        tau[k] = distortion_generic(spec, measure, p, v)?;
    }
    Ok(stencil(tau[0], tau[1], tau[2], tau[3], S_STEP))
}

/// `S(y) = ∂ₓτ·y − 2G·∂_yτ` with both partials from one dual evaluation.
pub fn s_curvature_chain(spec: &MetricSpec, measure: &MeasureSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let g = spray_generic(spec, x, y)?;
    let dy: Vec<f64> = g.iter().map(|a| -2.0 * a).collect();
    let xs: Vec<Dual<f64>> = seed(x, y);
    let ys: Vec<Dual<f64>> = seed(y, &dy);
    Ok(distortion_generic(spec, measure, &xs, &ys)?.du)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedRicci {
    /// `-∞` when `unbounded`.
    pub value: f64,
    pub ricci: f64,
    pub s: f64,
    pub ds_dt: f64,
    /// `N = n` with `S(y) ≠ 0`.
    pub unbounded: bool,
}

/// `Ric_N(y) = Ric(y) + Ṡ(y) − S²(y)/(N−n)` for unit `y`; `N = ∞` drops the
/// last term.
pub fn weighted_ricci(spec: &MetricSpec, measure: &MeasureSpec, x: &[f64], y: &[f64], big_n: f64) -> Result<WeightedRicci> {
    let n = spec.dim() as f64;
    if big_n.is_nan() || big_n < n {
        return Err(Error::Domain(format!("N = {big_n} below the dimension {n}")));
    }
    let f = spec.eval_f(x, y)?;
    if (f - 1.0).abs() > 1e-8 {
        return Err(Error::Invalid(format!("weighted Ricci needs F(y) = 1, got {f}")));
    }
    let ric = ricci(spec, x, y)?;
    let s = s_curvature_chain(spec, measure, x, y)?;
    let st = geodesic_stencil(spec, x, y, DS_STEP)?;
    let mut sv = [0.0; 4];
    for (k, (p, v)) in st.iter().enumerate() {
        sv[k] = s_curvature_chain(spec, measure, p, v)?;
    }
    let ds = stencil(sv[0], sv[1], sv[2], sv[3], DS_STEP);
    let (value, unbounded) = if big_n.is_infinite() {
        (ric + ds, false)
    } else if big_n == n {
        if s.abs() <= 1e-8 {
            (ric + ds, false)
        } else {
            (f64::NEG_INFINITY, true)
        }
    } else {
        (ric + ds - s * s / (big_n - n), false)
    };
    Ok(WeightedRicci {
        value,
        ricci: ric,
        s,
        ds_dt: ds,
        unbounded,
    })
}

/// Volume density in geodesic polar coordinates along one ray from `o`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarDensityTrace {
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    pub times: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    /// `Δt = ∂_t log σ̂` evaluated from the Jacobi fields.
    pub laplacian: Vec<f64>,
    /// `τ(y)` at the base point.
    pub tau: f64,
}

impl PolarDensityTrace {
    /// Columns `t, sigma_hat, log_sigma_hat, laplacian`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["t", "sigma_hat", "log_sigma_hat", "laplacian"]).expect("in-memory csv");
        for k in 0..self.times.len() {
            w.write_record([
                format!("{:.16e}", self.times[k]),
                format!("{:.16e}", self.sigma_hat[k]),
                format!("{:.16e}", self.sigma_hat[k].ln()),
                format!("{:.16e}", self.laplacian[k]),
            ])
            .expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("ascii csv")
    }
}

/// `{e_a}` completing `y/F(y)` to a `g_y`-orthonormal, positively oriented frame.
fn orthonormal_complement(g: &[f64], y: &[f64]) -> Vec<Vec<f64>> {
    let n = y.len();
    let fy = linalg::bilinear(g, n, y, y).sqrt();
    let mut frame: Vec<Vec<f64>> = vec![y.iter().map(|a| a / fy).collect()];
    for i in 0..n {
        if frame.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for e in &frame {
            let c = linalg::bilinear(g, n, &v, e);
            for k in 0..n {
                v[k] -= c * e[k];
            }
        }
        let nv = linalg::bilinear(g, n, &v, &v).sqrt();
        if nv > 1e-3 {
            frame.push(v.iter().map(|a| a / nv).collect());
        }
    }
    let mut cols = vec![0.0; n * n];
    for (j, e) in frame.iter().enumerate() {
        for i in 0..n {
            cols[i * n + j] = e[i];
        }
    }
    if linalg::det(&cols, n) < 0.0 {
        for a in frame.last_mut().unwrap() {
            *a = -*a;
        }
    }
    frame.remove(0);
    frame
}

/// `σ̂_o(t, y) = σ(γ(t)) · det[γ̇, J₁, …, J_{n−1}]` with `J_a(0) = 0`,
/// `J_a'(0) = e_a` and `{y, e_a}` `g_y`-orthonormal, so that
/// `σ̂/t^{n−1} → e^{−τ(y)}`.
pub fn polar_density(spec: &MetricSpec, measure: &MeasureSpec, o: &[f64], y: &[f64], times: &[f64]) -> Result<PolarDensityTrace> {
    let f = spec.eval_f(o, y)?;
    if (f - 1.0).abs() > 1e-10 {
        return Err(Error::Invalid(format!("polar density needs F(o, y) = 1, got {f}")));
    }
    if times.is_empty() || times[0] <= 0.0 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("polar grid must be positive and increasing".into()));
    }
    let n = o.len();
    let g = spec.fundamental_tensor(o, y)?.matrix;
    let frame = orthonormal_complement(&g, y);
    let init: Vec<(Vec<f64>, Vec<f64>)> = frame.iter().map(|e| (vec![0.0; n], e.clone())).collect();
    let tr = integrate_jacobi(spec, o, y, &init, times, &OdeOptions::default())?;
    if tr.times.len() < times.len() {
        return Err(Error::Domain(format!(
            "ray leaves the chart at t = {:?}",
            tr.exit_time
        )));
    }
    let mut out = PolarDensityTrace {
        base: o.to_vec(),
        direction: y.to_vec(),
        times: Vec::with_capacity(times.len()),
        sigma_hat: Vec::with_capacity(times.len()),
        laplacian: Vec::with_capacity(times.len()),
        tau: distortion(spec, measure, o, y)?,
    };
    for k in 0..tr.times.len() {
        let (p, v) = (&tr.points[k], &tr.velocities[k]);
        let acc: Vec<f64> = spray_generic(spec, p, v)?.iter().map(|a| -2.0 * a).collect();
        let mut m = vec![0.0; n * n];
        let mut md = vec![0.0; n * n];
        for i in 0..n {
            m[i * n] = v[i];
            md[i * n] = acc[i];
            for a in 0..n - 1 {
                m[i * n + a + 1] = tr.fields[k][a][i];
                md[i * n + a + 1] = tr.derivatives[k][a][i];
            }
        }
        let det = linalg::det(&m, n);
        if !(det > 0.0) {
            return Err(Error::ConjugatePoint { t: tr.times[k] });
        }
        // tr(M⁻¹Ṁ) column by column
        let mut trace = 0.0;
        for j in 0..n {
            let col: Vec<f64> = (0..n).map(|i| md[i * n + j]).collect();
            trace += linalg::solve(&m, n, &col)?[j];
        }
        let xs: Vec<Dual<f64>> = seed(p, v);
        let dlog = measure.density(spec, &xs)?.ln().du;
        let sigma = measure.density_at(spec, p)?;
        out.times.push(tr.times[k]);
        out.sigma_hat.push(sigma * det);
        out.laplacian.push(dlog + trace);
    }
    Ok(out)
}

/// Finite-difference weights for the first derivative at `z` on `nodes`.
pub(crate) fn fornberg_first(z: f64, nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let mut c = vec![[0.0f64; 2]; m];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..m {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// `Δt = ∂_t log σ̂` at `t` by 5-point differencing over the nearest nodes.
pub fn laplacian_distance(trace: &PolarDensityTrace, t: f64) -> Result<f64> {
    let m = trace.times.len();
    if m < 5 {
        return Err(Error::Domain("trace has fewer than 5 nodes".into()));
    }
    if !(t >= trace.times[2] && t <= trace.times[m - 3]) {
        return Err(Error::Domain(format!(
            "t = {t} outside [{}, {}]",
            trace.times[2],
            trace.times[m - 3]
        )));
    }
    let nearest = trace
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(i, _)| i)
        .unwrap();
    let i0 = nearest.saturating_sub(2).min(m - 5);
    let nodes = &trace.times[i0..i0 + 5];
    let w = fornberg_first(t, nodes);
    Ok((0..5).map(|k| w[k] * trace.sigma_hat[i0 + k].ln()).sum())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityLimit {
    pub limit: f64,
    pub expected: f64,
    pub relative_error: f64,
}

/// Richardson extrapolation of `σ̂(t, y)/t^{n−1}` from `t = h, h/2, h/4, h/8`
/// against `e^{−τ(y)}`.
pub fn density_limit(spec: &MetricSpec, measure: &MeasureSpec, o: &[f64], y: &[f64], h: f64) -> Result<DensityLimit> {
    let ts = [h / 8.0, h / 4.0, h / 2.0, h];
    let tr = polar_density(spec, measure, o, y, &ts)?;
    let n = o.len() as i32;
    let mut q: Vec<f64> = (0..4).map(|k| tr.sigma_hat[k] / ts[k].powi(n - 1)).collect();
    // q ordered by increasing t; eliminate t, t², t³ in turn
    for level in 1..4 {
        let f = 2f64.powi(level);
        q = (0..q.len() - 1).map(|k| (f * q[k] - q[k + 1]) / (f - 1.0)).collect();
    }
    let expected = (-tr.tau).exp();
    Ok(DensityLimit {
        limit: q[0],
        expected,
        relative_error: (q[0] - expected).abs() / expected,
    })
}

/// Solution of `𝔰'' + K𝔰 = 0`, `𝔰(0) = 0`, `𝔰'(0) = 1`.
pub fn s_k(k: f64, t: f64) -> f64 {
    if k > 0.0 {
        (k.sqrt() * t).sin() / k.sqrt()
    } else if k < 0.0 {
        ((-k).sqrt() * t).sinh() / (-k).sqrt()
    } else {
        t
    }
}

pub fn s_k_prime(k: f64, t: f64) -> f64 {
    if k > 0.0 {
        (k.sqrt() * t).cos()
    } else if k < 0.0 {
        ((-k).sqrt() * t).cosh()
    } else {
        1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "lemma", rename_all = "snake_case")]
pub enum Comparison {
    /// `Δr ≥ (n−1)/r` under `K ≤ 0` and the matching S sign.
    NonpositiveFlag { side: Side },
    /// `Δr ≤ (N−1)/r` under `Ric_N ≥ 0`; `n_eff = None` uses `N = n` via
    /// `Ric_∞ ≥ 0` or `Ric ≥ 0` and the matching S sign.
    RicciUpper { side: Side, n_eff: Option<f64> },
    /// `σ̂ ≤ e^{−τ+h²t} 𝔰^{n−1}_{−k²}(t)` under `Ric ≥ −(n−1)k²`, `S ≥ −h²`.
    VolumeBound { k: f64, h: f64 },
    /// `σ̂ ≤ e^{−τ} t^{n−1}` under `S_o⁺ ≥ 0` and `Ric_∞ ≥ 0` or `Ric ≥ 0`.
    EuclideanVolume,
    /// `Δt ≤ (n−1)𝔰'_K/𝔰_K + a` under `Ric_∞ ≥ (n−1)K`, `S_o⁺ ≥ −a`.
    WeightedRicciLower { k: f64, a: f64 },
}

impl Comparison {
    /// The sharpest instance of a comparison that the model's certificates
    /// support, e.g. `k = √(−Ric_min/(n−1))` for the volume bound.
    pub fn for_model(kind: &str, model: &ModelSpace) -> Result<Comparison> {
        let c = model.certificates();
        let n1 = model.dim() as f64 - 1.0;
        Ok(match kind {
            "nonpositive-flag" => Comparison::NonpositiveFlag { side: Side::Forward },
            "nonpositive-flag-backward" => Comparison::NonpositiveFlag { side: Side::Backward },
            "ricci-upper" => Comparison::RicciUpper {
                side: Side::Forward,
                n_eff: None,
            },
            "volume-bound" => Comparison::VolumeBound {
                k: (-c.ricci_lower.ok_or_else(|| refuse("Ricci lower bound"))? / n1).max(0.0).sqrt(),
                h: (-c.s_lower.ok_or_else(|| refuse("S lower bound"))?).max(0.0).sqrt(),
            },
            "euclidean-volume" => Comparison::EuclideanVolume,
            "weighted-ricci-lower" => {
                let a = if c.s_from_o.is_some_and(Sign::nonnegative) {
                    0.0
                } else {
                    (-c.s_lower.ok_or_else(|| refuse("S lower bound"))?).max(0.0)
                };
                Comparison::WeightedRicciLower {
                    k: c.ric_infinity_lower.ok_or_else(|| refuse("Ric_∞ lower bound"))? / n1,
                    a,
                }
            }
            other => return Err(Error::Invalid(format!("unknown comparison {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub times: usize,
    pub directions: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub model: String,
    pub comparison: Comparison,
    pub grid: ComparisonGrid,
    /// Absolute for Laplacian bounds, relative for volume bounds.
    pub worst_margin: f64,
    pub worst_t: f64,
    pub worst_direction: Vec<f64>,
    pub points: usize,
}

fn refuse(what: &str) -> Error {
    Error::Refused(format!("hypothesis not certified for this model: {what}"))
}

/// Unit-speed directions at `o`: equally spaced angles for `n = 2`, a
/// Fibonacci lattice for `n = 3`.
pub fn unit_directions(spec: &MetricSpec, o: &[f64], count: usize) -> Vec<Vec<f64>> {
    let n = o.len();
    (0..count)
        .map(|k| {
            let u = if n == 2 {
                let a = 2.0 * PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            } else {
                let z = 1.0 - (2.0 * k as f64 + 1.0) / count as f64;
                let s = (1.0 - z * z).sqrt();
                let a = PI * (3.0 - 5f64.sqrt()) * k as f64;
                let mut u = vec![s * a.cos(), s * a.sin(), z];
                u.resize(n, 0.0);
                u
            };
            let f = spec.norm(o, &u);
            u.iter().map(|a| a / f).collect()
        })
        .collect()
}

/// Default grid: 50 times up to a safe fraction of the injectivity radius.
pub fn default_grid(model: &ModelSpace, comparison: &Comparison) -> ComparisonGrid {
    let c = model.certificates();
    let side = match comparison {
        Comparison::NonpositiveFlag { side } | Comparison::RicciUpper { side, .. } => *side,
        _ => Side::Forward,
    };
    let inj = match side {
        Side::Forward => c.injectivity,
        Side::Backward => c.backward_injectivity,
    };
    let mut t_max = if inj.is_finite() { 0.95 * inj } else { 3.0 };
    if let Comparison::WeightedRicciLower { k, .. } = comparison {
        if *k > 0.0 {
            t_max = t_max.min(0.95 * PI / (2.0 * k.sqrt()));
        }
    }
    ComparisonGrid {
        t_min: t_max / 50.0,
        t_max,
        times: 50,
        directions: 16,
    }
}

/// Check one comparison inequality over a `(t, y)` grid on a model whose
/// certificates imply its hypotheses. Backward cases run on the reverse
/// metric, where `r₋` becomes the forward distance.
pub fn comparison_report(model: &ModelSpace, comparison: Comparison, grid: &ComparisonGrid) -> Result<ComparisonReport> {
    model.validate()?;
    let c = model.certificates();
    let n = model.dim() as f64;
    let nonneg = |v: Option<f64>, at_least: f64| v.is_some_and(|b| b >= at_least);
    let ric_any = nonneg(c.ric_infinity_lower, 0.0) || nonneg(c.ricci_lower, 0.0);
    let side = match comparison {
        Comparison::NonpositiveFlag { side } => {
            if !c.flag_upper.is_some_and(|k| k <= 0.0) {
                return Err(refuse("K ≤ 0"));
            }
            let ok = match side {
                Side::Forward => c.s_from_o.is_some_and(Sign::nonpositive),
                Side::Backward => c.s_to_o.is_some_and(Sign::nonnegative),
            };
            if !ok {
                return Err(refuse("S sign for the flag comparison"));
            }
            side
        }
        Comparison::RicciUpper { side, n_eff } => {
            match n_eff {
                Some(big_n) => {
                    if !c.ric_n_lower.is_some_and(|(n0, b)| big_n >= n0 && b >= 0.0) {
                        return Err(refuse("Ric_N ≥ 0"));
                    }
                }
                None => {
                    let s_ok = match side {
                        Side::Forward => c.s_from_o.is_some_and(Sign::nonnegative),
                        Side::Backward => c.s_to_o.is_some_and(Sign::nonpositive),
                    };
                    if !(ric_any && s_ok) {
                        return Err(refuse("Ric_∞ ≥ 0 or Ric ≥ 0 with the S sign"));
                    }
                }
            }
            side
        }
        Comparison::VolumeBound { k, h } => {
            if !(nonneg(c.ricci_lower, -(n - 1.0) * k * k) && nonneg(c.s_lower, -h * h)) {
                return Err(refuse("Ric ≥ −(n−1)k² and S ≥ −h²"));
            }
            Side::Forward
        }
        Comparison::EuclideanVolume => {
            if !(ric_any && c.s_from_o.is_some_and(Sign::nonnegative)) {
                return Err(refuse("S_o⁺ ≥ 0 with Ric_∞ ≥ 0 or Ric ≥ 0"));
            }
            Side::Forward
        }
        Comparison::WeightedRicciLower { k, a } => {
            let s_ok = c.s_from_o.is_some_and(Sign::nonnegative) || nonneg(c.s_lower, -a);
            if !(nonneg(c.ric_infinity_lower, (n - 1.0) * k) && a >= 0.0 && s_ok) {
                return Err(refuse("Ric_∞ ≥ (n−1)K and S_o⁺ ≥ −a"));
            }
            Side::Forward
        }
    };
    if !(grid.t_min > 0.0 && grid.t_max > grid.t_min && grid.times >= 2 && grid.directions >= 1) {
        return Err(Error::Invalid("comparison grid".into()));
    }
    let spec = match side {
        Side::Forward => model.metric(),
        Side::Backward => model.metric().reverse(),
    };
    let measure = model.measure();
    let o = model.origin();
    let times: Vec<f64> = (0..grid.times)
        .map(|k| grid.t_min + (grid.t_max - grid.t_min) * k as f64 / (grid.times - 1) as f64)
        .collect();
    let mut worst = (f64::INFINITY, 0.0, Vec::new());
    for y in unit_directions(&spec, &o, grid.directions) {
        let tr = polar_density(&spec, &measure, &o, &y, &times)?;
        for (k, &t) in tr.times.iter().enumerate() {
            let lap = tr.laplacian[k];
            let sig = tr.sigma_hat[k];
            let margin = match comparison {
                Comparison::NonpositiveFlag { .. } => lap - (n - 1.0) / t,
                Comparison::RicciUpper { n_eff, .. } => (n_eff.unwrap_or(n) - 1.0) / t - lap,
                Comparison::VolumeBound { k: kk, h } => {
                    let b = (-tr.tau + h * h * t).exp() * s_k(-kk * kk, t).powf(n - 1.0);
                    (b - sig) / b
                }
                Comparison::EuclideanVolume => {
                    let b = (-tr.tau).exp() * t.powf(n - 1.0);
                    (b - sig) / b
                }
                Comparison::WeightedRicciLower { k: kk, a } => {
                    (n - 1.0) * s_k_prime(kk, t) / s_k(kk, t) + a - lap
                }
            };
            if margin < worst.0 {
                worst = (margin, t, y.clone());
            }
        }
    }
    Ok(ComparisonReport {
        model: model.name().to_string(),
        comparison,
        grid: grid.clone(),
        worst_margin: worst.0,
        worst_t: worst.1,
        worst_direction: worst.2,
        points: grid.times * grid.directions,
    })
}
