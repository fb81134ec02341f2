//! Forward mode with `N` tangents sharing one primal.
//!
//! `Jet<T, N>` propagates a full `N`-column Jacobian in a single pass. The
//! primal is evaluated once instead of once per column, which matters when
//! `T` is a tape variable and every operation is recorded.

use std::ops::{Add, Div, Mul, Neg, Sub};

use super::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<T, const N: usize> {
    pub re: T,
    pub eps: [T; N],
}

impl<T: Scalar, const N: usize> Jet<T, N> {
    /// Primal with all tangents zero.
    pub fn constant(re: T) -> Self {
        Self {
            re,
            eps: [T::cst(0.0); N],
        }
    }

    /// Primal with tangent `e_k`.
    pub fn seeded(re: T, k: usize) -> Self {
        let mut j = Self::constant(re);
        j.eps[k] = T::cst(1.0);
        j
    }

    fn chain(self, re: T, d: T) -> Self {
        Self {
            re,
            eps: self.eps.map(|e| e * d),
        }
    }
}

/// Seeds `point` with the identity, so `out[i].eps[k] = ∂out_i/∂point_k`.
pub fn seed_identity<T: Scalar, const N: usize>(point: &[T]) -> Vec<Jet<T, N>> {
    point
        .iter()
        .enumerate()
        .map(|(k, &p)| Jet::seeded(p, k))
        .collect()
}

impl<T: Scalar, const N: usize> Add for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self {
            re: self.re + rhs.re,
            eps: std::array::from_fn(|k| self.eps[k] + rhs.eps[k]),
        }
    }
}

impl<T: Scalar, const N: usize> Sub for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self {
            re: self.re - rhs.re,
            eps: std::array::from_fn(|k| self.eps[k] - rhs.eps[k]),
        }
    }
}

impl<T: Scalar, const N: usize> Mul for Jet<T, N> {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Self {
        let eps = if T::RECORDS {
            std::array::from_fn(|k| T::dot(&[self.re, self.eps[k]], &[rhs.eps[k], rhs.re]))
        } else {
            std::array::from_fn(|k| self.re * rhs.eps[k] + self.eps[k] * rhs.re)
        };
        Self {
            re: self.re * rhs.re,
            eps,
        }
    }
}

impl<T: Scalar, const N: usize> Div for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.re / rhs.re;
        let eps = if T::RECORDS {
            let inv = T::cst(1.0) / rhs.re;
            let c = -(q * inv);
            std::array::from_fn(|k| T::dot(&[self.eps[k], rhs.eps[k]], &[inv, c]))
        } else {
            std::array::from_fn(|k| (self.eps[k] - q * rhs.eps[k]) / rhs.re)
        };
        Self { re: q, eps }
    }
}

impl<T: Scalar, const N: usize> Neg for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self {
            re: -self.re,
            eps: self.eps.map(|e| -e),
        }
    }
}

impl<T: Scalar, const N: usize> Add<f64> for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        Self {
            re: self.re + rhs,
            eps: self.eps,
        }
    }
}

impl<T: Scalar, const N: usize> Sub<f64> for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        Self {
            re: self.re - rhs,
            eps: self.eps,
        }
    }
}

impl<T: Scalar, const N: usize> Mul<f64> for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Self {
            re: self.re * rhs,
            eps: self.eps.map(|e| e * rhs),
        }
    }
}

impl<T: Scalar, const N: usize> Div<f64> for Jet<T, N> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        Self {
            re: self.re / rhs,
            eps: self.eps.map(|e| e / rhs),
        }
    }
}

impl<T: Scalar, const N: usize> Scalar for Jet<T, N> {
    const RECORDS: bool = T::RECORDS;

    fn cst(v: f64) -> Self {
        Self::constant(T::cst(v))
    }

    fn value(&self) -> f64 {
        self.re.value()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }

    fn ln(self) -> Self {
        self.chain(self.re.ln(), T::cst(1.0) / self.re)
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        self.chain(s, T::cst(0.5) / s)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn tanh(self) -> Self {
        let t = self.re.tanh();
        self.chain(t, -(t * t) + 1.0)
    }

    fn sigmoid(self) -> Self {
        let s = self.re.sigmoid();
        self.chain(s, s * (-s + 1.0))
    }

    fn softplus(self) -> Self {
        self.chain(self.re.softplus(), self.re.sigmoid())
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        if !T::RECORDS {
            let mut acc = Self::cst(0.0);
            for (x, y) in a.iter().zip(b) {
                acc = acc + *x * *y;
            }
            return acc;
        }
        // one fused node per output component: [a.re, a.eps_k] · [b.eps_k, b.re]
        let n = a.len();
        let re_a: Vec<T> = a.iter().map(|x| x.re).collect();
        let re_b: Vec<T> = b.iter().map(|y| y.re).collect();
        let mut left = Vec::with_capacity(2 * n);
        let mut right = Vec::with_capacity(2 * n);
        let eps = std::array::from_fn(|k| {
            left.clear();
            right.clear();
            left.extend_from_slice(&re_a);
            left.extend(a.iter().map(|x| x.eps[k]));
            right.extend(b.iter().map(|y| y.eps[k]));
            right.extend_from_slice(&re_b);
            T::dot(&left, &right)
        });
        Self {
            re: T::dot(&re_a, &re_b),
            eps,
        }
    }

    fn sum(xs: &[Self]) -> Self {
        let re: Vec<T> = xs.iter().map(|x| x.re).collect();
        let mut col = Vec::with_capacity(xs.len());
        let eps = std::array::from_fn(|k| {
            col.clear();
            col.extend(xs.iter().map(|x| x.eps[k]));
            T::sum(&col)
        });
        Self {
            re: T::sum(&re),
            eps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{Dual, Tape, Var};

    fn f<T: Scalar>(x: &[T]) -> T {
        let p = x[0] * x[1] / (x[2] + 3.0);
        let q = T::dot(x, &[x[1], x[2], x[0]]);
        (p.exp() + q.tanh() + x[0].sin() * x[2].sqrt() + 1.0).ln()
            + T::sum(x).sigmoid()
            + x[1].softplus()
    }

    const X: [f64; 3] = [0.4, -0.7, 1.3];

    #[test]
    fn matches_dual_columns() {
        let j: Jet<f64, 3> = f(&seed_identity(&X));
        for k in 0..3 {
            let d: Vec<Dual<f64>> = X
                .iter()
                .enumerate()
                .map(|(i, &v)| Dual::new(v, if i == k { 1.0 } else { 0.0 }))
                .collect();
            let g = f(&d);
            assert!((j.re - g.re).abs() < 1e-15);
            assert!((j.eps[k] - g.eps).abs() < 1e-14, "column {k}");
        }
    }

    #[test]
    fn tape_tangents_match_plain() {
        let plain: Jet<f64, 3> = f(&seed_identity(&X));
        let tape = Tape::new();
        let xs = tape.vars(&X);
        let j: Jet<Var, 3> = f(&seed_identity(&xs));
        assert_eq!(j.re.value(), plain.re);
        for k in 0..3 {
            assert!((j.eps[k].value() - plain.eps[k]).abs() < 1e-14);
        }
        // reverse over forward: d/dx of Σ_k ∂f/∂x_k against finite differences
        let s = Var::sum(&j.eps);
        let g = tape.gradient(s).unwrap().wrt_all(&xs).unwrap();
        let h = 1e-6;
        for i in 0..3 {
            let mut up = X;
            let mut dn = X;
            up[i] += h;
            dn[i] -= h;
            let su: f64 = f::<Jet<f64, 3>>(&seed_identity(&up)).eps.iter().sum();
            let sd: f64 = f::<Jet<f64, 3>>(&seed_identity(&dn)).eps.iter().sum();
            assert!((g[i] - (su - sd) / (2.0 * h)).abs() < 1e-6, "input {i}");
        }
    }
}
