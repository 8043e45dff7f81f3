//! Geodesics, the exponential map, Jacobi fields and distances.

use serde::{Deserialize, Serialize};

use crate::calculus::spray_generic;
use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::linalg;
use crate::metric::{MetricSpec, RiemannianModel};
use crate::ode::{dopri5, OdeOptions};
use crate::real::{seed, Dual};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeodesicPath {
    pub initial_point: Vec<f64>,
    pub initial_velocity: Vec<f64>,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    pub speeds: Vec<f64>,
    pub initial_speed: f64,
    /// Set when the path left the chart before the last requested node.
    pub exit_time: Option<f64>,
}

impl GeodesicPath {
    pub fn exited(&self) -> bool {
        self.exit_time.is_some()
    }

    pub fn endpoint(&self) -> &[f64] {
        self.points.last().map(|p| p.as_slice()).unwrap_or(&self.initial_point)
    }

    /// `max_k |F(γ̇(t_k)) − F(γ̇(0))| / F(γ̇(0))`.
    pub fn speed_drift(&self) -> f64 {
        let s0 = self.initial_speed;
        self.speeds.iter().map(|s| (s - s0).abs()).fold(0.0, f64::max) / s0
    }

    /// Columns `t, x0, …, x{n-1}, speed`.
    pub fn to_csv(&self) -> String {
        let n = self.initial_point.len();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.push("speed".into());
        w.write_record(&header).expect("in-memory csv");
        for k in 0..self.times.len() {
            let mut row = vec![format!("{:.16e}", self.times[k])];
            row.extend(self.points[k].iter().map(|v| format!("{v:.16e}")));
            row.push(format!("{:.16e}", self.speeds[k]));
            w.write_record(&row).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("ascii csv")
    }
}

fn geodesic_rhs(spec: &MetricSpec, u: &[f64]) -> Result<Vec<f64>> {
    let n = u.len() / 2;
    let (x, v) = u.split_at(n);
    if !spec.in_chart(x) {
        return Err(Error::Domain(format!("{x:?}")));
    }
    let mut out = v.to_vec();
    if v.iter().all(|a| *a == 0.0) {
        out.extend(std::iter::repeat(0.0).take(n));
        return Ok(out);
    }
    let g = spray_generic(spec, x, v)?;
    out.extend(g.iter().map(|a| -2.0 * a));
    Ok(out)
}

/// Geodesic with `γ(0) = x`, `γ̇(0) = y` sampled at the signed, monotone `times`.
pub fn integrate_geodesic_at(spec: &MetricSpec, x: &[f64], y: &[f64], times: &[f64], opts: &OdeOptions) -> Result<GeodesicPath> {
    spec.check_structure()?;
    spec.check_point(x)?;
    spec.check_vector(y)?;
    if y.iter().all(|a| *a == 0.0) {
        return Err(Error::Degenerate("geodesic with zero initial velocity".into()));
    }
    let n = x.len();
    let mut u0 = x.to_vec();
    u0.extend_from_slice(y);
    let mut nodes = vec![0.0];
    nodes.extend(times.iter().copied().filter(|t| *t != 0.0));
    let sol = dopri5(
        |_, u| geodesic_rhs(spec, u),
        |u| spec.in_chart(&u[..n]),
        &u0,
        0.0,
        &nodes,
        opts,
    )?;
    let mut path = GeodesicPath {
        initial_point: x.to_vec(),
        initial_velocity: y.to_vec(),
        times: Vec::new(),
        points: Vec::new(),
        velocities: Vec::new(),
        speeds: Vec::new(),
        initial_speed: spec.norm(x, y),
        exit_time: sol.exit_time,
    };
    let keep_zero = times.first() == Some(&0.0);
    for (k, (t, s)) in sol.times.iter().zip(&sol.states).enumerate() {
        if k == 0 && !keep_zero {
            continue;
        }
        path.times.push(*t);
        path.points.push(s[..n].to_vec());
        path.velocities.push(s[n..].to_vec());
        path.speeds.push(spec.norm(&s[..n], &s[n..]));
    }
    Ok(path)
}

/// Geodesic on `[0, t_end]` with `nodes` equally spaced samples after `0`.
pub fn integrate_geodesic(spec: &MetricSpec, x: &[f64], y: &[f64], t_end: f64, nodes: usize) -> Result<GeodesicPath> {
    if !(t_end > 0.0) {
        return Err(Error::Invalid(format!("geodesic horizon {t_end} must be positive")));
    }
    let nodes = nodes.max(1);
    let times: Vec<f64> = (0..=nodes).map(|k| t_end * k as f64 / nodes as f64).collect();
    integrate_geodesic_at(spec, x, y, &times, &OdeOptions::default())
}

/// Largest `|γ̈ + 2G(γ̇)|` at interior nodes of a uniformly sampled path, with
/// `γ̈` from 4th-order central differences of the sampled velocities.
pub fn geodesic_residual(spec: &MetricSpec, path: &GeodesicPath) -> Result<f64> {
    let m = path.times.len();
    if m < 5 {
        return Err(Error::Invalid("residual needs at least 5 nodes".into()));
    }
    let h = path.times[1] - path.times[0];
    let n = path.initial_point.len();
    let mut worst: f64 = 0.0;
    for k in 2..m - 2 {
        let g = spray_generic(spec, &path.points[k], &path.velocities[k])?;
        for i in 0..n {
            let v = |j: usize| path.velocities[j][i];
            let acc = (v(k - 2) - 8.0 * v(k - 1) + 8.0 * v(k + 1) - v(k + 2)) / (12.0 * h);
            worst = worst.max((acc + 2.0 * g[i]).abs());
        }
    }
    Ok(worst)
}

pub fn exp_map(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if y.iter().all(|a| *a == 0.0) {
        spec.check_point(x)?;
        return Ok(x.to_vec());
    }
    let path = integrate_geodesic_at(spec, x, y, &[1.0], &OdeOptions::default())?;
    if path.exited() {
        return Err(Error::Domain(format!(
            "exp_x(y) leaves the chart at t = {:?}",
            path.exit_time
        )));
    }
    Ok(path.endpoint().to_vec())
}

/// Geodesic plus Jacobi fields `J_a` with prescribed `J_a(0)`, `J_a'(0)`.
#[derive(Clone, Debug)]
pub struct JacobiTrace {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
    /// `fields[k][a]` is `J_a(t_k)`.
    pub fields: Vec<Vec<Vec<f64>>>,
    pub derivatives: Vec<Vec<Vec<f64>>>,
    pub exit_time: Option<f64>,
}

/// Variational system `J'' = −2 DG(γ, γ̇)[J, J']` alongside the geodesic.
pub fn integrate_jacobi(
    spec: &MetricSpec,
    x: &[f64],
    y: &[f64],
    initial: &[(Vec<f64>, Vec<f64>)],
    times: &[f64],
    opts: &OdeOptions,
) -> Result<JacobiTrace> {
    spec.check_structure()?;
    spec.check_point(x)?;
    spec.check_vector(y)?;
    let n = x.len();
    let m = initial.len();
    let mut u0 = x.to_vec();
    u0.extend_from_slice(y);
    for (j, jp) in initial {
        u0.extend_from_slice(j);
        u0.extend_from_slice(jp);
    }
    let rhs = |_: f64, u: &[f64]| -> Result<Vec<f64>> {
        let mut out = geodesic_rhs(spec, &u[..2 * n])?;
        let (xs, vs) = (&u[..n], &u[n..2 * n]);
        for a in 0..m {
            let off = 2 * n + 2 * n * a;
            let j = &u[off..off + n];
            let jp = &u[off + n..off + 2 * n];
            out.extend_from_slice(jp);
            let xd: Vec<Dual<f64>> = seed(xs, j);
            let vd: Vec<Dual<f64>> = seed(vs, jp);
            let dg = spray_generic(spec, &xd, &vd)?;
            out.extend(dg.iter().map(|d| -2.0 * d.du));
        }
        Ok(out)
    };
    let mut nodes = vec![0.0];
    nodes.extend(times.iter().copied().filter(|t| *t != 0.0));
    let sol = dopri5(rhs, |u| spec.in_chart(&u[..n]), &u0, 0.0, &nodes, opts)?;
    let mut tr = JacobiTrace {
        times: Vec::new(),
        points: Vec::new(),
        velocities: Vec::new(),
        fields: Vec::new(),
        derivatives: Vec::new(),
        exit_time: sol.exit_time,
    };
    let keep_zero = times.first() == Some(&0.0);
    for (k, (t, s)) in sol.times.iter().zip(&sol.states).enumerate() {
        if k == 0 && !keep_zero {
            continue;
        }
        tr.times.push(*t);
        tr.points.push(s[..n].to_vec());
        tr.velocities.push(s[n..2 * n].to_vec());
        let mut fs = Vec::with_capacity(m);
        let mut ds = Vec::with_capacity(m);
        for a in 0..m {
            let off = 2 * n + 2 * n * a;
            fs.push(s[off..off + n].to_vec());
            ds.push(s[off + n..off + 2 * n].to_vec());
        }
        tr.fields.push(fs);
        tr.derivatives.push(ds);
    }
    Ok(tr)
}

/// `∫₀¹ F(x₁ + s(x₂−x₁), x₂−x₁) ds` by adaptive bisection with 64-point
/// Gauss–Legendre panels; panels shrink where the integrand steepens near
/// the chart boundary.
pub fn segment_length(spec: &MetricSpec, x1: &[f64], x2: &[f64]) -> Result<f64> {
    let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| b - a).collect();
    let gl = GaussLegendre::new(64);
    let f = |s: f64| {
        let p: Vec<f64> = x1.iter().zip(&d).map(|(a, b)| a + s * b).collect();
        spec.norm(&p, &d)
    };
    fn panel(gl: &GaussLegendre, f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: usize) -> Result<f64> {
        let m = 0.5 * (a + b);
        let l = gl.integrate(a, m, f);
        let r = gl.integrate(m, b, f);
        if (l + r - whole).abs() <= 1e-14 * (l + r).abs() || depth == 0 {
            if depth == 0 && (l + r - whole).abs() > 1e-10 * (l + r).abs() {
                return Err(Error::numerical(
                    "segment quadrature did not converge",
                    format!("panel [{a}, {b}]"),
                ));
            }
            return Ok(l + r);
        }
        Ok(panel(gl, f, a, m, l, depth - 1)? + panel(gl, f, m, b, r, depth - 1)?)
    }
    let whole = gl.integrate(0.0, 1.0, f);
    panel(&gl, &f, 0.0, 1.0, whole, 40)
}

fn sphere_embed(x: &[f64]) -> Vec<f64> {
    let r2 = linalg::dot(x, x);
    let mut p: Vec<f64> = x.iter().map(|a| 2.0 * a / (1.0 + r2)).collect();
    p.push((r2 - 1.0) / (1.0 + r2));
    p
}

/// Closed-form or one-dimensional distance where the family allows it.
pub fn distance_closed(spec: &MetricSpec, x1: &[f64], x2: &[f64]) -> Option<Result<f64>> {
    let d: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| b - a).collect();
    match spec {
        _ if spec.is_minkowski() => Some(Ok(spec.norm(x1, &d))),
        MetricSpec::Funk { .. } => Some(segment_length(spec, x1, x2)),
        MetricSpec::Reverse { inner } => distance_closed(inner, x2, x1),
        MetricSpec::Riemannian { model: RiemannianModel::Sphere, .. } => {
            let (p, q) = (sphere_embed(x1), sphere_embed(x2));
            let diff: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a - b).collect();
            let sum: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a + b).collect();
            Some(Ok(2.0 * linalg::norm2(&diff).atan2(linalg::norm2(&sum))))
        }
        MetricSpec::Riemannian { model: RiemannianModel::Hyperbolic, .. } => {
            let a = linalg::dot(x1, x1);
            let b = linalg::dot(x2, x2);
            let dd = linalg::dot(&d, &d);
            Some(Ok((1.0 + 2.0 * dd / ((1.0 - a) * (1.0 - b))).acosh()))
        }
        _ => None,
    }
}

/// `d_F(x₁, x₂)`; closed forms where registered, shooting otherwise.
pub fn distance(spec: &MetricSpec, x1: &[f64], x2: &[f64]) -> Result<f64> {
    spec.check_structure()?;
    spec.check_point(x1)?;
    spec.check_point(x2)?;
    if x1 == x2 {
        return Ok(0.0);
    }
    match distance_closed(spec, x1, x2) {
        Some(r) => r,
        None => Ok(shoot(spec, x1, x2)?.distance),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShootingReport {
    pub distance: f64,
    pub initial_velocity: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Two-point problem `exp_{x₁}(v) = x₂` by damped Newton on `v`, with the
/// Jacobian `∂exp/∂v` from the variational system. Starts from the chord
/// scaled by `1, 0.5, 2`.
pub fn shoot(spec: &MetricSpec, x1: &[f64], x2: &[f64]) -> Result<ShootingReport> {
    let n = x1.len();
    let chord: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| b - a).collect();
    let scale = linalg::norm2(&chord).max(1e-300);
    let cols: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|a| {
            let mut e = vec![0.0; n];
            e[a] = 1.0;
            (vec![0.0; n], e)
        })
        .collect();
    let opts = OdeOptions::default();
    let mut last_err = None;
    for s in [1.0, 0.5, 2.0] {
        let mut v: Vec<f64> = chord.iter().map(|c| c * s).collect();
        let mut res = f64::INFINITY;
        for it in 0..60 {
            let tr = match integrate_jacobi(spec, x1, &v, &cols, &[1.0], &opts) {
                Ok(tr) if tr.exit_time.is_none() => tr,
                Ok(_) => break,
                Err(e) => {
                    last_err = Some(e);
                    break;
                }
            };
            let end = &tr.points[0];
            let r: Vec<f64> = end.iter().zip(x2).map(|(a, b)| a - b).collect();
            res = linalg::norm2(&r);
            if res <= 1e-12 * (1.0 + scale) {
                return Ok(ShootingReport {
                    distance: spec.norm(x1, &v),
                    initial_velocity: v,
                    residual: res,
                    iterations: it,
                });
            }
            let mut jac = vec![0.0; n * n];
            for a in 0..n {
                for i in 0..n {
                    jac[i * n + a] = tr.fields[0][a][i];
                }
            }
            let step = match linalg::solve(&jac, n, &r) {
                Ok(s) => s,
                Err(_) => break,
            };
            let sn = linalg::norm2(&step);
            let damp = if sn > scale { scale / sn } else { 1.0 };
            for i in 0..n {
                v[i] -= damp * step[i];
            }
        }
        if last_err.is_none() {
            last_err = Some(Error::numerical(
                "shooting did not converge",
                format!("residual {res:e} from start scale {s}"),
            ));
        }
    }
    Err(last_err.unwrap_or_else(|| Error::numerical("shooting failed", String::new())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_geodesic_is_a_line() {
        let m = MetricSpec::Randers { b: vec![0.3, 0.1] };
        let p = integrate_geodesic(&m, &[1.0, 2.0], &[0.5, -1.0], 2.0, 4).unwrap();
        let e = p.endpoint();
        assert!((e[0] - 2.0).abs() < 1e-12 && (e[1] - 0.0).abs() < 1e-12);
    }

    #[test]
    fn funk_distances_from_origin() {
        let f = MetricSpec::funk(2);
        let x = [0.6, 0.0];
        assert!((distance(&f, &[0.0, 0.0], &x).unwrap() + (0.4f64).ln()).abs() < 1e-13);
        assert!((distance(&f, &x, &[0.0, 0.0]).unwrap() - (1.6f64).ln()).abs() < 1e-13);
    }

    #[test]
    fn shooting_matches_closed_form_on_hyperbolic() {
        let h = MetricSpec::hyperbolic(2);
        let a = [0.1, -0.2];
        let b = [0.4, 0.3];
        let s = shoot(&h, &a, &b).unwrap();
        let c = distance(&h, &a, &b).unwrap();
        assert!((s.distance - c).abs() < 1e-9, "{} vs {c}", s.distance);
    }

    #[test]
    fn csv_header() {
        let p = integrate_geodesic(&MetricSpec::euclidean(2), &[0.0, 0.0], &[1.0, 0.0], 1.0, 2).unwrap();
        assert!(p.to_csv().starts_with("t,x0,x1,speed\n"));
    }
}
