//! Dense row-major kernels for the small symmetric systems that appear in
//! the metric code. Generic over [`Real`] so they propagate derivatives.

use crate::error::{Error, Result};
use crate::real::Real;

/// Lower Cholesky factor of an `n×n` symmetric positive-definite matrix.
pub fn cholesky<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s.value() > 0.0) {
                    return Err(Error::Inadmissible(format!(
                        "matrix not positive definite (pivot {} = {:e})",
                        i,
                        s.value()
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solve `L Lᵀ x = b` given the Cholesky factor.
pub fn cholesky_solve<T: Real>(l: &[T], n: usize, b: &[T]) -> Vec<T> {
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    z
}

pub fn spd_solve<T: Real>(a: &[T], n: usize, b: &[T]) -> Result<Vec<T>> {
    let l = cholesky(a, n)?;
    Ok(cholesky_solve(&l, n, b))
}

/// Inverse of an SPD matrix.
pub fn spd_inverse<T: Real>(a: &[T], n: usize) -> Result<Vec<T>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![T::zero(); n * n];
    for j in 0..n {
        let e: Vec<T> = (0..n)
            .map(|i| if i == j { T::one() } else { T::zero() })
            .collect();
        let col = cholesky_solve(&l, n, &e);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(inv)
}

/// Determinant of an SPD matrix via its Cholesky factor.
pub fn spd_det<T: Real>(a: &[T], n: usize) -> Result<T> {
    let l = cholesky(a, n)?;
    let mut d = T::one();
    for i in 0..n {
        d *= l[i * n + i];
    }
    Ok(d * d)
}

/// Determinant of a general square matrix by partial-pivot elimination.
pub fn det(a: &[f64], n: usize) -> f64 {
    let mut m = a.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs()))
            .unwrap();
        if m[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                m.swap(p * n + k, c * n + k);
            }
            d = -d;
        }
        let piv = m[c * n + c];
        d *= piv;
        for i in c + 1..n {
            let f = m[i * n + c] / piv;
            for k in c..n {
                m[i * n + k] -= f * m[c * n + k];
            }
        }
    }
    d
}

/// Solve a general square system by partial-pivot elimination.
pub fn solve(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i * n + c].abs().total_cmp(&m[j * n + c].abs()))
            .unwrap();
        if m[p * n + c].abs() < 1e-300 {
            return Err(Error::Degenerate("singular linear system".into()));
        }
        if p != c {
            for k in 0..n {
                m.swap(p * n + k, c * n + k);
            }
            x.swap(p, c);
        }
        for i in c + 1..n {
            let f = m[i * n + c] / m[c * n + c];
            for k in c..n {
                m[i * n + k] -= f * m[c * n + k];
            }
            x[i] -= f * x[c];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in i + 1..n {
            s -= m[i * n + k] * x[k];
        }
        x[i] = s / m[i * n + i];
    }
    Ok(x)
}

pub fn mat_vec<T: Real>(a: &[T], n: usize, v: &[T]) -> Vec<T> {
    (0..n)
        .map(|i| {
            let mut s = T::zero();
            for j in 0..n {
                s += a[i * n + j] * v[j];
            }
            s
        })
        .collect()
}

/// Bilinear form `uᵀ A v`.
pub fn bilinear<T: Real>(a: &[T], n: usize, u: &[T], v: &[T]) -> T {
    let av = mat_vec(a, n, v);
    dot(u, &av)
}

pub fn dot<T: Real>(u: &[T], v: &[T]) -> T {
    let mut s = T::zero();
    for (a, b) in u.iter().zip(v) {
        s += *a * *b;
    }
    s
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Smallest eigenvalue and its eigenvector of a symmetric matrix.
pub fn min_eigen(a: &[f64], n: usize) -> (f64, Vec<f64>) {
    let m = nalgebra::DMatrix::from_row_slice(n, n, a);
    let eig = nalgebra::SymmetricEigen::new(m);
    let (k, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    (lam, eig.eigenvectors.column(k).iter().copied().collect())
}

/// Largest eigenvalue of `B^{-1} A` for symmetric `A` and SPD `B`.
pub fn max_generalized_eigen(a: &[f64], b: &[f64], n: usize) -> Result<f64> {
    let l = cholesky(b, n)?;
    // C = L^{-1} A L^{-T}
    let mut linv = vec![0.0; n * n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        for i in 0..n {
            let mut s = e[i];
            for k in 0..i {
                s -= l[i * n + k] * linv[k * n + j];
            }
            linv[i * n + j] = s / l[i * n + i];
        }
    }
    let li = nalgebra::DMatrix::from_row_slice(n, n, &linv);
    let am = nalgebra::DMatrix::from_row_slice(n, n, a);
    let c = &li * am * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(c);
    Ok(eig.eigenvalues.iter().copied().fold(f64::MIN, f64::max))
}

/// Smallest eigenvalue of the pencil `A v = λ B v`.
pub fn min_generalized_eigen(a: &[f64], b: &[f64], n: usize) -> Result<f64> {
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    Ok(-max_generalized_eigen(&neg, b, n)?)
}
