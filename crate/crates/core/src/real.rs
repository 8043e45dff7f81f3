//! Scalar abstraction shared by plain floats and forward-mode dual numbers.
//!
//! Every metric, field and measure density is written once against [`Real`]
//! and evaluated either on `f64` or on nested [`Dual`] numbers. Nesting depth
//! is unbounded at the type level; the curvature code uses four levels.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Real:
    Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn cst(v: f64) -> Self;
    /// Primal value with all infinitesimal parts dropped.
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan(self) -> Self;
    fn tanh(self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
    fn recip(self) -> Self {
        Self::one() / self
    }
    fn powi(self, k: i32) -> Self {
        let mut acc = Self::one();
        let base = if k < 0 { self.recip() } else { self };
        for _ in 0..k.unsigned_abs() {
            acc *= base;
        }
        acc
    }
    fn abs(self) -> Self {
        if self.value() < 0.0 {
            -self
        } else {
            self
        }
    }
    fn tan(self) -> Self {
        self.sin() / self.cos()
    }
    fn atanh(self) -> Self {
        ((self + 1.0) / (-self + 1.0)).ln() * 0.5
    }
    fn acosh(self) -> Self {
        (self + (self * self - 1.0).sqrt()).ln()
    }
    fn sinh(self) -> Self {
        let e = self.exp();
        (e - e.recip()) * 0.5
    }
    fn cosh(self) -> Self {
        let e = self.exp();
        (e + e.recip()) * 0.5
    }
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn atan(self) -> Self {
        f64::atan(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn atanh(self) -> Self {
        f64::atanh(self)
    }
    fn acosh(self) -> Self {
        f64::acosh(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
}

/// First-order dual number `re + du·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub du: T,
}

impl<T: Real> Dual<T> {
    pub fn new(re: T, du: T) -> Self {
        Dual { re, du }
    }

    pub fn constant(re: T) -> Self {
        Dual { re, du: T::zero() }
    }

    pub fn variable(re: T) -> Self {
        Dual { re, du: T::one() }
    }

    #[inline]
    fn chain(self, f: T, df: T) -> Self {
        Dual {
            re: f,
            du: self.du * df,
        }
    }
}

/// Lift a slice into duals with the given tangent.
pub fn seed<T: Real>(x: &[T], dir: &[T]) -> Vec<Dual<T>> {
    x.iter().zip(dir).map(|(&a, &b)| Dual::new(a, b)).collect()
}

/// Lift a slice into duals with zero tangent.
pub fn lift<T: Real>(x: &[T]) -> Vec<Dual<T>> {
    x.iter().map(|&a| Dual::constant(a)).collect()
}

/// Lift an `f64` slice into any `Real`.
pub fn promote<T: Real>(x: &[f64]) -> Vec<T> {
    x.iter().map(|&a| T::cst(a)).collect()
}

/// Unit coordinate vector.
pub fn basis<T: Real>(n: usize, i: usize) -> Vec<T> {
    (0..n)
        .map(|k| if k == i { T::one() } else { T::zero() })
        .collect()
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Dual::new(self.re * o.re, self.du * o.re + self.re * o.du)
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = o.re.recip();
        let q = self.re * inv;
        Dual::new(q, (self.du - q * o.du) * inv)
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.du)
    }
}

impl<T: Real> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Dual::new(self.re + o, self.du)
    }
}

impl<T: Real> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Dual::new(self.re - o, self.du)
    }
}

impl<T: Real> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        Dual::new(self.re * o, self.du * o)
    }
}

impl<T: Real> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        Dual::new(self.re / o, self.du / o)
    }
}

impl<T: Real> AddAssign for Dual<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Dual<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> MulAssign for Dual<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Real> Real for Dual<T> {
    fn cst(v: f64) -> Self {
        Dual::constant(T::cst(v))
    }
    fn value(self) -> f64 {
        self.re.value()
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, (s * 2.0).recip())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), self.re.recip())
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn atan(self) -> Self {
        self.chain(self.re.atan(), (self.re * self.re + 1.0).recip())
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, -(t * t) + 1.0)
    }
    fn powf(self, p: f64) -> Self {
        let v = self.re.powf(p);
        self.chain(v, self.re.powf(p - 1.0) * p)
    }
}

/// Derivative of a scalar function of one variable.
pub fn derivative<F>(f: F, t: f64) -> (f64, f64)
where
    F: Fn(Dual<f64>) -> Dual<f64>,
{
    let d = f(Dual::variable(t));
    (d.re, d.du)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elementary_derivatives() {
        let (v, d) = derivative(|x| x.sin() * x.exp(), 0.7);
        assert!((v - 0.7f64.sin() * 0.7f64.exp()).abs() < 1e-15);
        let expect = 0.7f64.exp() * (0.7f64.sin() + 0.7f64.cos());
        assert!((d - expect).abs() < 1e-14);

        let (_, d) = derivative(|x| x.powf(2.5) / (x + 1.0), 1.3);
        let expect = 2.5 * 1.3f64.powf(1.5) / 2.3 - 1.3f64.powf(2.5) / 2.3f64.powi(2);
        assert!((d - expect).abs() < 1e-13);

        let (_, d) = derivative(|x| x.atanh() + x.atan() + x.tanh(), 0.4);
        let expect = 1.0 / (1.0 - 0.16) + 1.0 / 1.16 + 1.0 - 0.4f64.tanh().powi(2);
        assert!((d - expect).abs() < 1e-13);
    }

    #[test]
    fn nested_second_derivative() {
        // f(x) = x^3 ln x, f'' = 6x ln x + 5x
        let x = 1.7;
        let v: Dual<Dual<f64>> = Dual::new(Dual::new(x, 1.0), Dual::new(1.0, 0.0));
        let f = v * v * v * v.ln();
        let expect = 6.0 * x * x.ln() + 5.0 * x;
        assert!((f.du.du - expect).abs() < 1e-12);
        assert!((f.re.du - f.du.re).abs() < 1e-14);
    }

    #[test]
    fn powi_negative_and_abs() {
        let (v, d) = derivative(|x| x.powi(-2), 2.0);
        assert!((v - 0.25).abs() < 1e-16);
        assert!((d + 0.25).abs() < 1e-15);
        let (v, d) = derivative(|x| x.abs(), -3.0);
        assert_eq!(v, 3.0);
        assert_eq!(d, -1.0);
    }
}
