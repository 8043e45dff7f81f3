//! Scalar fields on a chart, evaluated generically so derivatives come from
//! the dual-number engine.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::real::{Dual, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Zero,
    Constant { value: f64 },
    /// `⟨a, x⟩`.
    Linear { coeffs: Vec<f64> },
    /// `scale·|x|²/2 + offset`.
    HalfSquare { scale: f64, offset: f64 },
    /// `scale·|x|^exponent`, singular at the origin for negative exponents.
    RadialPower { exponent: f64, scale: f64 },
}

impl ScalarField {
    /// Standard Gaussian potential `|x|²/2 + (n/2) log 2π` in dimension `n`.
    pub fn gaussian(n: usize) -> Self {
        ScalarField::HalfSquare {
            scale: 1.0,
            offset: 0.5 * n as f64 * std::f64::consts::TAU.ln(),
        }
    }

    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            ScalarField::Zero => T::zero(),
            ScalarField::Constant { value } => T::cst(*value),
            ScalarField::Linear { coeffs } => {
                let mut s = T::zero();
                for (a, xi) in coeffs.iter().zip(x) {
                    s += *xi * *a;
                }
                s
            }
            ScalarField::HalfSquare { scale, offset } => linalg::dot(x, x) * (0.5 * scale) + *offset,
            ScalarField::RadialPower { exponent, scale } => linalg::dot(x, x).powf(0.5 * exponent) * *scale,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    pub fn differential(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let xs: Vec<Dual<f64>> = x
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| Dual::new(v, if k == i { 1.0 } else { 0.0 }))
                    .collect();
                self.eval(&xs).du
            })
            .collect()
    }

    /// Coordinate Hessian, row-major.
    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let xs: Vec<Dual<Dual<f64>>> = x
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| {
                        let a = if k == i { 1.0 } else { 0.0 };
                        let b = if k == j { 1.0 } else { 0.0 };
                        Dual::new(Dual::new(v, a), Dual::new(b, 0.0))
                    })
                    .collect();
                let v = self.eval(&xs).du.du;
                h[i * n + j] = v;
                h[j * n + i] = v;
            }
        }
        h
    }

    /// `-f`.
    pub fn negated(&self) -> ScalarField {
        match self {
            ScalarField::Zero => ScalarField::Zero,
            ScalarField::Constant { value } => ScalarField::Constant { value: -value },
            ScalarField::Linear { coeffs } => ScalarField::Linear {
                coeffs: coeffs.iter().map(|a| -a).collect(),
            },
            ScalarField::HalfSquare { scale, offset } => ScalarField::HalfSquare {
                scale: -scale,
                offset: -offset,
            },
            ScalarField::RadialPower { exponent, scale } => ScalarField::RadialPower {
                exponent: *exponent,
                scale: -scale,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivatives() {
        let f = ScalarField::gaussian(2);
        let x = [0.3, -1.2];
        let d = f.differential(&x);
        assert!((d[0] - 0.3).abs() < 1e-15 && (d[1] + 1.2).abs() < 1e-15);
        let h = f.hessian(&x);
        assert_eq!(h, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn radial_power_gradient() {
        let f = ScalarField::RadialPower { exponent: -1.0, scale: 1.0 };
        let x = [3.0, 4.0, 0.0];
        let d = f.differential(&x);
        // ∇ r^{-1} = -x / r³
        assert!((d[0] + 3.0 / 125.0).abs() < 1e-15);
        assert!((d[1] + 4.0 / 125.0).abs() < 1e-15);
    }
}
