//! Spray coefficients and curvature through nested dual numbers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::metric::MetricSpec;
use crate::real::{basis, lift, seed, Dual, Real};

/// Relative tolerance below which a flag counts as degenerate.
pub const FLAG_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SprayCoefficients {
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    pub g: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureTransform {
    pub base: Vec<f64>,
    pub direction: Vec<f64>,
    /// Row-major `Rⁱ_k`: row `i`, column `k`.
    pub matrix: Vec<f64>,
}

impl CurvatureTransform {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.matrix, v.len(), v)
    }

    pub fn trace(&self) -> f64 {
        let n = self.direction.len();
        (0..n).map(|i| self.matrix[i * n + i]).sum()
    }
}

/// `Gⁱ = ¼ gⁱˡ ([F²]_{xᵏyˡ} yᵏ − [F²]_{xˡ})` on any scalar type.
///
/// This is the classical tensor form `¼ gⁱˡ (2∂ₖg_jl − ∂ₗg_jk) yʲyᵏ` after
/// contracting with Euler's identities; see [`spray_christoffel`].
pub fn spray_generic<T: Real>(spec: &MetricSpec, x: &[T], y: &[T]) -> Result<Vec<T>> {
    let n = y.len();
    let g = spec.fundamental_matrix(x, y);
    let ys: Vec<Dual<T>> = lift(y);
    let mut rhs = vec![T::zero(); n];
    for l in 0..n {
        let xs: Vec<Dual<T>> = seed(x, &basis::<T>(n, l));
        let f = spec.norm(&xs, &ys);
        let dxl = (f * f).du;

        let xm: Vec<Dual<Dual<T>>> = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| Dual::new(Dual::constant(a), Dual::constant(b)))
            .collect();
        let ym: Vec<Dual<Dual<T>>> = y
            .iter()
            .enumerate()
            .map(|(k, &b)| {
                Dual::new(
                    Dual::new(b, if k == l { T::one() } else { T::zero() }),
                    Dual::constant(T::zero()),
                )
            })
            .collect();
        let fm = spec.norm(&xm, &ym);
        let mixed = (fm * fm).du.du;
        rhs[l] = (mixed - dxl) * 0.25;
    }
    linalg::spd_solve(&g, n, &rhs)
}

pub fn spray(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<SprayCoefficients> {
    spec.check_structure()?;
    spec.check_point(x)?;
    spec.check_vector(y)?;
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("spray at y = 0".into()));
    }
    let g = spray_generic(spec, x, y)?;
    Ok(SprayCoefficients {
        base: x.to_vec(),
        direction: y.to_vec(),
        g,
    })
}

/// Tensor form `¼ gⁱˡ (2 ∂ₖg_jl − ∂ₗg_jk) yʲyᵏ` with the `x`-derivatives of
/// the fundamental tensor taken separately. Kept as a cross-check of
/// [`spray_generic`].
pub fn spray_christoffel(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    let g = spec.fundamental_matrix(x, y);
    let ys: Vec<Dual<f64>> = lift(y);
    // dg[k][j*n+l] = ∂g_jl/∂x^k
    let dg: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let xs = seed(x, &basis::<f64>(n, k));
            spec.fundamental_matrix(&xs, &ys).iter().map(|d| d.du).collect()
        })
        .collect();
    let mut rhs = vec![0.0; n];
    for (l, r) in rhs.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..n {
            for k in 0..n {
                s += (2.0 * dg[k][j * n + l] - dg[l][j * n + k]) * y[j] * y[k];
            }
        }
        *r = 0.25 * s;
    }
    linalg::spd_solve(&g, n, &rhs)
}

fn column<T: Real>(v: Vec<Dual<T>>) -> Vec<T> {
    v.into_iter().map(|d| d.du).collect()
}

/// `Rⁱ_k = 2∂ₖGⁱ − yʲ∂ⱼ∂_{yᵏ}Gⁱ + 2Gʲ∂_{yʲ}∂_{yᵏ}Gⁱ − ∂_{yʲ}Gⁱ ∂_{yᵏ}Gʲ`.
pub fn riemann_transform(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<CurvatureTransform> {
    let sp = spray(spec, x, y)?;
    let n = y.len();
    let gv = sp.g;
    let mut r = vec![0.0; n * n];
    // Jacobian N = ∂G/∂y, columns k
    let mut nmat = vec![0.0; n * n];
    for k in 0..n {
        let dx = column(spray_generic(spec, &seed(x, &basis::<f64>(n, k)), &lift(y))?);
        let dy = column(spray_generic(spec, &lift(x), &seed(y, &basis::<f64>(n, k)))?);
        // x + ε₁y, y + ε₂e_k
        let xm: Vec<Dual<Dual<f64>>> = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| Dual::new(Dual::constant(a), Dual::constant(b)))
            .collect();
        let ym: Vec<Dual<Dual<f64>>> = (0..n)
            .map(|j| Dual::new(Dual::new(y[j], if j == k { 1.0 } else { 0.0 }), Dual::constant(0.0)))
            .collect();
        let t2: Vec<f64> = spray_generic(spec, &xm, &ym)?.iter().map(|d| d.du.du).collect();
        // y + ε₁G + ε₂e_k
        let xg: Vec<Dual<Dual<f64>>> = x.iter().map(|&a| Dual::constant(Dual::constant(a))).collect();
        let yg: Vec<Dual<Dual<f64>>> = (0..n)
            .map(|j| {
                Dual::new(
                    Dual::new(y[j], if j == k { 1.0 } else { 0.0 }),
                    Dual::constant(gv[j]),
                )
            })
            .collect();
        let t3: Vec<f64> = spray_generic(spec, &xg, &yg)?.iter().map(|d| d.du.du).collect();
        for i in 0..n {
            r[i * n + k] = 2.0 * dx[i] - t2[i] + 2.0 * t3[i];
            nmat[i * n + k] = dy[i];
        }
    }
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += nmat[i * n + j] * nmat[j * n + k];
            }
            r[i * n + k] -= s;
        }
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite curvature", format!("x = {x:?}, y = {y:?}")));
    }
    Ok(CurvatureTransform {
        base: x.to_vec(),
        direction: y.to_vec(),
        matrix: r,
    })
}

pub fn flag_curvature(spec: &MetricSpec, x: &[f64], y: &[f64], v: &[f64]) -> Result<f64> {
    flag_curvature_with_tolerance(spec, x, y, v, FLAG_TOLERANCE)
}

/// `K(y, v) = g_y(R_y v, v) / (g_y(y,y) g_y(v,v) − g_y(y,v)²)`.
pub fn flag_curvature_with_tolerance(
    spec: &MetricSpec,
    x: &[f64],
    y: &[f64],
    v: &[f64],
    tol: f64,
) -> Result<f64> {
    spec.check_vector(v)?;
    let rt = riemann_transform(spec, x, y)?;
    let n = y.len();
    let g = spec.fundamental_matrix(x, y);
    let gyy = linalg::bilinear(&g, n, y, y);
    let gvv = linalg::bilinear(&g, n, v, v);
    let gyv = linalg::bilinear(&g, n, y, v);
    let den = gyy * gvv - gyv * gyv;
    let fv = spec.norm(x, v);
    let threshold = tol * gyy * fv * fv;
    if !(den > threshold) {
        return Err(Error::DegenerateFlag {
            denominator: den,
            threshold,
        });
    }
    let rv = rt.apply(v);
    Ok(linalg::bilinear(&g, n, &rv, v) / den)
}

/// `Ric(y) = tr R_y / F²(y)`.
pub fn ricci(spec: &MetricSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let rt = riemann_transform(spec, x, y)?;
    let f = spec.norm(x, y);
    Ok(rt.trace() / (f * f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_spray_vanishes() {
        let m = MetricSpec::Randers { b: vec![0.2, -0.3] };
        let s = spray(&m, &[0.4, 0.1], &[1.0, 2.0]).unwrap();
        assert!(s.g.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn funk_spray_is_projective() {
        let f = MetricSpec::funk(2);
        let x = [0.3, -0.4];
        let y = [0.7, 0.2];
        let s = spray(&f, &x, &y).unwrap();
        let fv = f.norm(&x, &y);
        for i in 0..2 {
            assert!((s.g[i] - 0.5 * fv * y[i]).abs() < 1e-12);
        }
        let c = spray_christoffel(&f, &x, &y).unwrap();
        for i in 0..2 {
            assert!((s.g[i] - c[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn funk_flag_curvature() {
        let f = MetricSpec::funk(2);
        let k = flag_curvature(&f, &[0.2, 0.5], &[1.0, -0.3], &[0.4, 0.9]).unwrap();
        assert!((k + 0.25).abs() < 1e-10, "{k}");
    }

    #[test]
    fn degenerate_flag_refused() {
        let f = MetricSpec::funk(2);
        assert!(matches!(
            flag_curvature(&f, &[0.1, 0.1], &[1.0, 1.0], &[2.0, 2.0]),
            Err(Error::DegenerateFlag { .. })
        ));
    }
}
