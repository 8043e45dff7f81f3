use serde::{Deserialize, Serialize};

use super::MetricSpec;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg;
use crate::real::{promote, Real};

/// Outcome of the indicatrix maximization behind [`dual_norm`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualNormReport {
    pub value: f64,
    /// Maximizer on the indicatrix `F(x, y) = 1`.
    pub maximizer: Vec<f64>,
    /// `𝔏⁻¹(ξ) = F*(ξ) · maximizer`.
    pub preimage: Vec<f64>,
    pub starts: usize,
    pub ascent_iterations: usize,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// `𝔏(X) = g_X(X, ·)`, zero for `X = 0`.
pub fn legendre(spec: &MetricSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    spec.check_structure()?;
    spec.check_point(x)?;
    spec.check_vector(v)?;
    if v.iter().all(|a| *a == 0.0) {
        return Ok(vec![0.0; v.len()]);
    }
    Ok(spec.legendre_generic(x, v))
}

fn project_to_indicatrix(spec: &MetricSpec, x: &[f64], u: &[f64]) -> Vec<f64> {
    let f = spec.norm(x, u);
    u.iter().map(|a| a / f).collect()
}

fn ascend(spec: &MetricSpec, x: &[f64], xi: &[f64], start: &[f64]) -> (Vec<f64>, f64, usize) {
    let xin = linalg::norm2(xi);
    let mut y = project_to_indicatrix(spec, x, start);
    let mut val = linalg::dot(xi, &y);
    let mut eta = 0.5 * linalg::norm2(&y) / xin;
    let mut iters = 0;
    for _ in 0..400 {
        iters += 1;
        let nrm = spec.legendre_generic(x, &y);
        let nn = linalg::dot(&nrm, &nrm);
        let c = linalg::dot(xi, &nrm) / nn;
        let t: Vec<f64> = xi.iter().zip(&nrm).map(|(a, b)| a - c * b).collect();
        if linalg::norm2(&t) <= 1e-10 * xin {
            break;
        }
        let mut accepted = false;
        while eta > 1e-16 {
            let cand: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a + eta * b).collect();
            let cand = project_to_indicatrix(spec, x, &cand);
            let cv = linalg::dot(xi, &cand);
            if cv.is_finite() && cv > val {
                y = cand;
                val = cv;
                eta *= 1.5;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (y, val, iters)
}

fn newton_polish(
    spec: &MetricSpec,
    x: &[f64],
    xi: &[f64],
    mut big_y: Vec<f64>,
) -> Result<(Vec<f64>, usize, f64)> {
    let n = xi.len();
    let xin = linalg::norm2(xi);
    let phi = |v: &[f64]| {
        let f = spec.norm(x, v);
        0.5 * f * f - linalg::dot(xi, v)
    };
    let mut iters = 0;
    let mut res = f64::INFINITY;
    for _ in 0..100 {
        let grad: Vec<f64> = spec
            .legendre_generic(x, &big_y)
            .iter()
            .zip(xi)
            .map(|(a, b)| a - b)
            .collect();
        res = linalg::norm2(&grad);
        if res <= 1e-13 * xin {
            break;
        }
        iters += 1;
        let g = spec.fundamental_matrix(x, &big_y);
        let step = linalg::spd_solve(&g, n, &grad)?;
        let slope = -linalg::dot(&grad, &step);
        let p0 = phi(&big_y);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = big_y.iter().zip(&step).map(|(a, b)| a - t * b).collect();
            let pc = phi(&cand);
            if pc.is_finite() && pc <= p0 + 1e-4 * t * slope + 1e-15 * p0.abs() {
                big_y = cand;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::numerical(
                    "Legendre inversion line search stalled",
                    format!("residual {res:e} at Y = {big_y:?}"),
                ));
            }
        }
    }
    Ok((big_y, iters, res))
}

/// `F*(x, ξ) = sup_{F(x,y)=1} ξ(y)` by multi-start projected ascent on the
/// indicatrix followed by Newton polish on `𝔏(Y) = ξ`.
pub fn dual_norm(spec: &MetricSpec, x: &[f64], xi: &[f64]) -> Result<DualNormReport> {
    spec.check_structure()?;
    spec.check_point(x)?;
    spec.check_vector(xi)?;
    let n = xi.len();
    let xin = linalg::norm2(xi);
    if xin == 0.0 {
        return Ok(DualNormReport {
            value: 0.0,
            maximizer: vec![0.0; n],
            preimage: vec![0.0; n],
            starts: 0,
            ascent_iterations: 0,
            newton_iterations: 0,
            residual: 0.0,
        });
    }
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(2 * n + 1);
    for i in 0..n {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = s;
            starts.push(e);
        }
    }
    starts.push(xi.iter().map(|a| a / xin).collect());
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut ascent_iterations = 0;
    for s in &starts {
        let (y, v, it) = ascend(spec, x, xi, s);
        ascent_iterations += it;
        if best.as_ref().map_or(true, |b| v > b.1) {
            best = Some((y, v));
        }
    }
    let (y, v) = best.unwrap();
    if !(v > 0.0) {
        return Err(Error::numerical(
            "indicatrix ascent found no positive value",
            format!("xi = {xi:?}"),
        ));
    }
    let seed: Vec<f64> = y.iter().map(|a| a * v).collect();
    let (big_y, newton_iterations, residual) = newton_polish(spec, x, xi, seed)?;
    if residual > 1e-9 * xin {
        return Err(Error::numerical(
            "Legendre inversion did not converge",
            format!("residual {residual:e}, xi = {xi:?}"),
        ));
    }
    let value = spec.norm(x, &big_y);
    Ok(DualNormReport {
        value,
        maximizer: big_y.iter().map(|a| a / value).collect(),
        preimage: big_y,
        starts: starts.len(),
        ascent_iterations,
        newton_iterations,
        residual,
    })
}

/// Closed form where available, numerical maximization otherwise.
pub fn dual_norm_fast(spec: &MetricSpec, x: &[f64], xi: &[f64]) -> Result<f64> {
    if let Some(v) = spec.dual_norm_closed(x, xi) {
        return Ok(v);
    }
    Ok(dual_norm(spec, x, xi)?.value)
}

/// `𝔏⁻¹(ξ)`, zero for `ξ = 0`.
pub fn legendre_inverse(spec: &MetricSpec, x: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    if let MetricSpec::Euclidean { .. } | MetricSpec::Riemannian { .. } = spec {
        spec.check_structure()?;
        spec.check_point(x)?;
        spec.check_vector(xi)?;
        let g = spec.fundamental_matrix(x, xi);
        return linalg::spd_solve(&g, xi.len(), xi);
    }
    Ok(dual_norm(spec, x, xi)?.preimage)
}

/// `𝔏⁻¹` on any scalar type: the `f64` root refined by two Newton steps
/// carried out in `T`, which propagates first and second derivatives.
pub fn legendre_inverse_generic<T: Real>(spec: &MetricSpec, x: &[T], xi: &[T]) -> Result<Vec<T>> {
    let n = xi.len();
    if let MetricSpec::Euclidean { .. } | MetricSpec::Riemannian { .. } = spec {
        let probe: Vec<T> = vec![T::one(); n];
        let g = spec.fundamental_matrix(x, &probe);
        return linalg::spd_solve(&g, n, xi);
    }
    let xv: Vec<f64> = x.iter().map(|a| a.value()).collect();
    let xiv: Vec<f64> = xi.iter().map(|a| a.value()).collect();
    if xiv.iter().all(|a| *a == 0.0) {
        return Ok(vec![T::zero(); n]);
    }
    let root = legendre_inverse(spec, &xv, &xiv)?;
    let mut y: Vec<T> = promote(&root);
    for _ in 0..2 {
        let l = spec.legendre_generic(x, &y);
        let r: Vec<T> = l.iter().zip(xi).map(|(a, b)| *a - *b).collect();
        let g = spec.fundamental_matrix(x, &y);
        let d = linalg::spd_solve(&g, n, &r)?;
        for (yi, di) in y.iter_mut().zip(&d) {
            *yi -= *di;
        }
    }
    Ok(y)
}

/// `∇f = 𝔏⁻¹(df)`.
pub fn gradient(spec: &MetricSpec, f: &ScalarField, x: &[f64]) -> Result<Vec<f64>> {
    spec.check_point(x)?;
    let df = f.differential(x);
    legendre_inverse(spec, x, &df)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        let f = MetricSpec::funk(2);
        assert_eq!(legendre(&f, &[0.1, 0.2], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(legendre_inverse(&f, &[0.1, 0.2], &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn euclidean_is_self_dual() {
        let e = MetricSpec::euclidean(2);
        let r = dual_norm(&e, &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((r.value - 5.0).abs() < 1e-12);
        let l = legendre(&e, &[1.0, 1.0], &[0.3, -0.7]).unwrap();
        assert!((l[0] - 0.3).abs() < 1e-15 && (l[1] + 0.7).abs() < 1e-15);
    }

    #[test]
    fn funk_numeric_matches_closed_form() {
        let f = MetricSpec::funk(2);
        let x = [0.5, 0.0];
        let xi = [1.0, 0.0];
        let r = dual_norm(&f, &x, &xi).unwrap();
        let closed = f.dual_norm_closed(&x, &xi).unwrap();
        assert!((r.value - closed).abs() < 1e-10, "{} vs {}", r.value, closed);
    }
}
