use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Numeric kind that model code is written against, so the same forward pass
/// runs on plain `f64`, forward-mode [`Dual`](super::Dual) numbers, reverse-mode
/// [`Var`](super::Var)s, and their nesting.
///
/// Branching decisions (bin lookup, clamping) must be made on [`Scalar::value`].
pub trait Scalar:
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
    /// Whether operations on this kind are recorded on a tape, in which case
    /// fused reductions should be used instead of operator chains.
    const RECORDS: bool = false;

    /// A constant (no derivative information).
    fn cst(v: f64) -> Self;

    /// Primal value.
    fn value(&self) -> f64;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tanh(self) -> Self;
    fn sigmoid(self) -> Self;
    /// `ln(1 + e^x)`.
    fn softplus(self) -> Self;

    fn square(self) -> Self {
        self * self
    }

    /// `Σ a_i b_i`. Tape-backed kinds record this as a single node.
    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let mut acc = Self::cst(0.0);
        for (x, y) in a.iter().zip(b) {
            acc = acc + *x * *y;
        }
        acc
    }

    fn sum(xs: &[Self]) -> Self {
        let mut acc = Self::cst(0.0);
        for x in xs {
            acc = acc + *x;
        }
        acc
    }
}

pub(crate) fn softplus_f64(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn sigmoid_f64(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sigmoid(self) -> Self {
        sigmoid_f64(self)
    }
    fn softplus(self) -> Self {
        softplus_f64(self)
    }
    fn dot(a: &[Self], b: &[Self]) -> Self {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
}

/// Lifts a slice of `f64` into any scalar kind as constants.
pub fn constants<T: Scalar>(xs: &[f64]) -> Vec<T> {
    xs.iter().map(|&x| T::cst(x)).collect()
}

/// Primal values of a slice of scalars.
pub fn values<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(Scalar::value).collect()
}
