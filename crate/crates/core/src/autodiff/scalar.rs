//! Scalar abstraction shared by plain numbers, tape variables, and jets.
//!
//! Differential-geometry and shell-mechanics code in this crate is written
//! once, generically over [`Scalar`]. Instantiating the same formulas with
//! `f64`, tape variables, or jets-of-scalars yields plain evaluation,
//! parameter gradients, and input derivatives without duplicating any math.

use std::ops::{Add, Div, Mul, Neg, Sub};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A field-like scalar supporting the elementary functions used by charts,
/// trial functions, and shell energy algebra.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Embed a plain constant.
    fn lit(x: f64) -> Self;
    /// The underlying numeric value (derivative information discarded).
    fn value(self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;

    /// Fused weighted sum: `init + sum_i a_i * b_i`.
    ///
    /// Semantically identical to a fold of `+` and `*`; tape variables
    /// override it with a single multi-argument node, which is where the
    /// bulk of network-forward time goes.
    fn dot<I: IntoIterator<Item = (Self, Self)>>(pairs: I, init: Self) -> Self {
        pairs.into_iter().fold(init, |acc, (a, b)| acc + a * b)
    }
}

/// Scalars that can evaluate activation functions together with enough
/// derivatives to propagate second-order jets through them.
pub trait ActScalar: Scalar {
    /// `(gelu(x), gelu'(x), gelu''(x))`.
    fn gelu_d012(self) -> (Self, Self, Self);
    /// `(tanh(x), tanh'(x), tanh''(x))`.
    fn tanh_d012(self) -> (Self, Self, Self);
    /// `(sigmoid(x), sigmoid'(x), sigmoid''(x))`.
    fn sigmoid_d012(self) -> (Self, Self, Self);
}

/// Standard Gaussian cumulative distribution.
#[inline]
pub fn gauss_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2))
}

/// Standard Gaussian density.
#[inline]
pub fn gauss_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// GELU in the exact Gaussian-CDF form `x * Phi(x)` with derivatives 0..=3.
///
/// Closed forms: g' = Phi + x phi, g'' = phi (2 - x^2), g''' = phi (x^3 - 4x).
#[inline]
pub fn gelu_family(x: f64) -> (f64, f64, f64, f64) {
    let cdf = gauss_cdf(x);
    let pdf = gauss_pdf(x);
    (
        x * cdf,
        cdf + x * pdf,
        pdf * (2.0 - x * x),
        pdf * (x * x * x - 4.0 * x),
    )
}

/// tanh with derivatives 0..=3.
#[inline]
pub fn tanh_family(x: f64) -> (f64, f64, f64, f64) {
    let t = x.tanh();
    let s = 1.0 - t * t;
    (t, s, -2.0 * t * s, (6.0 * t * t - 2.0) * s)
}

/// Logistic sigmoid with derivatives 0..=3.
#[inline]
pub fn sigmoid_family(x: f64) -> (f64, f64, f64, f64) {
    let s = 1.0 / (1.0 + (-x).exp());
    let d1 = s * (1.0 - s);
    let d2 = d1 * (1.0 - 2.0 * s);
    let d3 = d2 * (1.0 - 2.0 * s) - 2.0 * d1 * d1;
    (s, d1, d2, d3)
}

impl Scalar for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
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
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

impl ActScalar for f64 {
    #[inline]
    fn gelu_d012(self) -> (Self, Self, Self) {
        let (g, g1, g2, _) = gelu_family(self);
        (g, g1, g2)
    }
    #[inline]
    fn tanh_d012(self) -> (Self, Self, Self) {
        let (t, t1, t2, _) = tanh_family(self);
        (t, t1, t2)
    }
    #[inline]
    fn sigmoid_d012(self) -> (Self, Self, Self) {
        let (s, s1, s2, _) = sigmoid_family(self);
        (s, s1, s2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn gelu_value_and_slope_at_zero() {
        let (g, g1, g2, _) = gelu_family(0.0);
        assert_eq!(g, 0.0);
        assert_eq!(g1, 0.5);
        assert!((g2 - 2.0 * FRAC_1_SQRT_2PI).abs() < 1e-15);
    }

    #[test]
    fn activation_derivative_ladders_match_finite_differences() {
        for &x in &[-2.3, -0.7, -0.1, 0.0, 0.4, 1.9] {
            let (_, g1, g2, g3) = gelu_family(x);
            assert!((central4(|u| gelu_family(u).0, x, 1e-3) - g1).abs() < 1e-9);
            assert!((central4(|u| gelu_family(u).1, x, 1e-3) - g2).abs() < 1e-9);
            assert!((central4(|u| gelu_family(u).2, x, 1e-3) - g3).abs() < 1e-9);

            let (_, t1, t2, t3) = tanh_family(x);
            assert!((central4(|u| tanh_family(u).0, x, 1e-3) - t1).abs() < 1e-9);
            assert!((central4(|u| tanh_family(u).1, x, 1e-3) - t2).abs() < 1e-9);
            assert!((central4(|u| tanh_family(u).2, x, 1e-3) - t3).abs() < 1e-9);

            let (_, s1, s2, s3) = sigmoid_family(x);
            assert!((central4(|u| sigmoid_family(u).0, x, 1e-3) - s1).abs() < 1e-9);
            assert!((central4(|u| sigmoid_family(u).1, x, 1e-3) - s2).abs() < 1e-9);
            assert!((central4(|u| sigmoid_family(u).2, x, 1e-3) - s3).abs() < 1e-9);
        }
    }

    #[test]
    fn gelu_monotone_on_claimed_interval() {
        // GELU is monotone increasing for x >= -0.7.
        let mut x = -0.7;
        while x < 6.0 {
            assert!(gelu_family(x).1 > 0.0, "gelu'({x}) <= 0");
            x += 0.01;
        }
    }
}
