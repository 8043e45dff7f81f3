//! Strong-convexity checks for the polynomial metric constructions.

use serde::{Deserialize, Serialize};

use super::{poly, poly_derivative};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    /// Smallest value of the checked quantity over the scan.
    pub worst_margin: f64,
    /// Location of the worst margin: `(s, b)` for (α,β), a unit direction for fourth-root.
    pub witness: Vec<f64>,
    pub samples: usize,
}

const GRID: usize = 200;

/// Scan `φ(s) > 0` and `φ(s) - sφ'(s) + (b² - s²)φ''(s) > 0` on a
/// 200×200 grid of `0 < b < b0`, `|s| < b`.
pub fn validate_alpha_beta(phi: &[f64], b0: f64) -> Result<AdmissibilityReport> {
    if !(b0 > 0.0) {
        return Err(Error::Invalid(format!("b0 = {b0} must be positive")));
    }
    let d1 = poly_derivative(phi);
    let d2 = poly_derivative(&d1);
    let mut worst = f64::INFINITY;
    let mut witness = vec![0.0, 0.0];
    for i in 1..=GRID {
        let b = b0 * i as f64 / (GRID as f64 + 1.0);
        for j in 0..GRID {
            let s = -b + 2.0 * b * (j as f64 + 0.5) / GRID as f64;
            let p: f64 = poly(phi, s);
            let q = p - s * poly::<f64>(&d1, s) + (b * b - s * s) * poly::<f64>(&d2, s);
            let m = p.min(q);
            if m < worst {
                worst = m;
                witness = vec![s, b];
            }
        }
    }
    // φ itself at the edge |s| → b0
    for s in [-b0, b0] {
        let p: f64 = poly(phi, s * (1.0 - 1e-12));
        if p < worst {
            worst = p;
            witness = vec![s, b0];
        }
    }
    let report = AdmissibilityReport {
        admissible: worst > 0.0,
        worst_margin: worst,
        witness,
        samples: GRID * GRID,
    };
    if !report.admissible {
        return Err(Error::Inadmissible(format!(
            "(α,β) condition fails: margin {:e} at (s, b) = ({}, {})",
            report.worst_margin, report.witness[0], report.witness[1]
        )));
    }
    Ok(report)
}

fn quartic_derivatives(a: &[f64], n: usize, y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let idx = |i: usize, j: usize, k: usize, l: usize| ((i * n + j) * n + k) * n + l;
    let mut big_a = 0.0;
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let c = a[idx(i, j, k, l)];
                    if c == 0.0 {
                        continue;
                    }
                    big_a += c * y[i] * y[j] * y[k] * y[l];
                    // symmetrized derivatives of the monomial
                    let ys = [y[i], y[j], y[k], y[l]];
                    let is = [i, j, k, l];
                    for p in 0..4 {
                        let mut prod = c;
                        for q in 0..4 {
                            if q != p {
                                prod *= ys[q];
                            }
                        }
                        g[is[p]] += prod;
                        for q in 0..4 {
                            if q == p {
                                continue;
                            }
                            let mut prod2 = c;
                            for r in 0..4 {
                                if r != p && r != q {
                                    prod2 *= ys[r];
                                }
                            }
                            h[is[p] * n + is[q]] += prod2;
                        }
                    }
                }
            }
        }
    }
    (big_a, g, h)
}

/// Smallest eigenvalue of `2A A_ij - A_i A_j` over 10⁴ unit directions,
/// normalized by `A²` so the margin is scale free.
pub fn validate_fourth_root(a: &[f64], n: usize) -> Result<AdmissibilityReport> {
    if a.len() != n.pow(4) {
        return Err(Error::Invalid(format!("expected {} coefficients", n.pow(4))));
    }
    let count = 10_000;
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
    let dirs = super::constants::sphere_directions(n, count, &mut rng);
    let mut worst = f64::INFINITY;
    let mut witness = dirs[0].clone();
    for y in &dirs {
        let (big_a, g, h) = quartic_derivatives(a, n, y);
        let margin = if big_a <= 0.0 {
            big_a
        } else {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    m[i * n + j] = 2.0 * big_a * h[i * n + j] - g[i] * g[j];
                }
            }
            linalg::min_eigen(&m, n).0 / (big_a * big_a)
        };
        if margin < worst {
            worst = margin;
            witness = y.clone();
        }
    }
    let report = AdmissibilityReport {
        admissible: worst > 1e-10,
        worst_margin: worst,
        witness,
        samples: count,
    };
    if !report.admissible {
        return Err(Error::Inadmissible(format!(
            "fourth-root form not strongly convex: margin {:e} at y = {:?}",
            report.worst_margin, report.witness
        )));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riemannian_phi_is_admissible() {
        let r = validate_alpha_beta(&[1.0], 0.9).unwrap();
        assert!(r.admissible);
        assert!((r.worst_margin - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_derivatives_match_hand_values() {
        // A = (y0² + y1²)² at y = (1, 0): A = 1, A_i = (4, 0), A_ij = diag(12, 4)
        let mut a = vec![0.0; 16];
        let idx = |i: usize, j: usize, k: usize, l: usize| ((i * 2 + j) * 2 + k) * 2 + l;
        for i in 0..2 {
            for k in 0..2 {
                a[idx(i, i, k, k)] += 1.0;
            }
        }
        let (big_a, g, h) = quartic_derivatives(&a, 2, &[1.0, 0.0]);
        assert!((big_a - 1.0).abs() < 1e-14);
        assert!((g[0] - 4.0).abs() < 1e-14 && g[1].abs() < 1e-14);
        assert!((h[0] - 12.0).abs() < 1e-14 && (h[3] - 4.0).abs() < 1e-14);
        assert!(h[1].abs() < 1e-14);
    }
}
