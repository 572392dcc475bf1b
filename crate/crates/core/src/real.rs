//! Scalar abstraction shared by plain `f64` evaluation and the reverse-mode
//! tape in [`crate::autodiff`].
//!
//! Every model formula that sits on the rollout path is written once against
//! [`Real`]. Parameters stay `f64`; only quantities that depend on the
//! planner's decisions flow through the generic type.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    /// `self^p` for a constant exponent.
    fn powf(self, p: f64) -> Self;

    /// `c - self` without needing `f64: Sub<Self>`.
    fn rsub(self, c: f64) -> Self {
        -self + c
    }

    /// `c / self`.
    fn recip_scaled(self, c: f64) -> Self {
        Self::constant(c) / self
    }

    fn log10(self) -> Self {
        self.ln() * std::f64::consts::LOG10_E
    }
}

impl Real for f64 {
    #[inline]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(self) -> f64 {
        self
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
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// Larger of a tracked value and a constant; the derivative follows the branch taken.
#[inline]
pub fn max_c<R: Real>(x: R, c: f64) -> R {
    if x.value() >= c {
        x
    } else {
        R::constant(c)
    }
}

/// Smaller of a tracked value and a constant.
#[inline]
pub fn min_c<R: Real>(x: R, c: f64) -> R {
    if x.value() <= c {
        x
    } else {
        R::constant(c)
    }
}
