//! Forward-mode dual numbers.
//!
//! `Dual<T>` carries a primal and one tangent, both of kind `T`. With
//! `T = f64` this is ordinary forward mode; with `T = Var` the tangent is
//! itself recorded on a tape, which is how gradients of Jacobian columns are
//! obtained during regularized training.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Scalar> Dual<T> {
    pub fn new(re: T, eps: T) -> Self {
        Self { re, eps }
    }

    /// Primal with zero tangent.
    pub fn constant(re: T) -> Self {
        Self {
            re,
            eps: T::cst(0.0),
        }
    }
}

/// Seeds a point with a tangent direction.
pub fn seed<T: Scalar>(point: &[T], direction: &[f64]) -> Vec<Dual<T>> {
    point
        .iter()
        .zip(direction)
        .map(|(&p, &d)| Dual::new(p, T::cst(d)))
        .collect()
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual::new(self.re * rhs.re, self.re * rhs.eps + self.eps * rhs.re)
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.re / rhs.re;
        Dual::new(q, (self.eps - q * rhs.eps) / rhs.re)
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual::new(-self.re, -self.eps)
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Dual::new(self.re + rhs, self.eps)
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Dual::new(self.re - rhs, self.eps)
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Dual::new(self.re * rhs, self.eps * rhs)
    }
}

impl<T: Scalar> Div<f64> for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        Dual::new(self.re / rhs, self.eps / rhs)
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    const RECORDS: bool = T::RECORDS;

    fn cst(v: f64) -> Self {
        Dual::new(T::cst(v), T::cst(0.0))
    }

    fn value(&self) -> f64 {
        self.re.value()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, self.eps * e)
    }

    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.eps / self.re)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, self.eps / (s * 2.0))
    }

    fn sin(self) -> Self {
        Dual::new(self.re.sin(), self.eps * self.re.cos())
    }

    fn cos(self) -> Self {
        Dual::new(self.re.cos(), -(self.eps * self.re.sin()))
    }

    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::new(t, self.eps * (-(t * t) + 1.0))
    }

    fn sigmoid(self) -> Self {
        let s = self.re.sigmoid();
        Dual::new(s, self.eps * (s * (-s + 1.0)))
    }

    fn softplus(self) -> Self {
        Dual::new(self.re.softplus(), self.eps * self.re.sigmoid())
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        if !T::RECORDS {
            let mut re = T::cst(0.0);
            let mut eps = T::cst(0.0);
            for (x, y) in a.iter().zip(b) {
                re = re + x.re * y.re;
                eps = eps + x.re * y.eps + x.eps * y.re;
            }
            return Dual::new(re, eps);
        }
        let are: Vec<T> = a.iter().map(|d| d.re).collect();
        let bre: Vec<T> = b.iter().map(|d| d.re).collect();
        let aeps: Vec<T> = a.iter().map(|d| d.eps).collect();
        let beps: Vec<T> = b.iter().map(|d| d.eps).collect();
        Dual::new(
            T::dot(&are, &bre),
            T::dot(&are, &beps) + T::dot(&aeps, &bre),
        )
    }
}
