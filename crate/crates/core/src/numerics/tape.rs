//! Reverse-mode tape.
//!
//! Every recorded node stores its parents and the local partial derivative
//! with respect to each of them. Nodes are appended in evaluation order, so the
//! node list is topologically sorted and a single backward sweep yields the
//! adjoint of every node.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::atomic::{AtomicU64, Ordering};

use super::scalar::{sigmoid_f64, softplus_f64, Scalar};
use crate::error::{Error, Result};

static NEXT_TAPE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Default)]
struct Nodes {
    /// Exclusive end offset of each node's parent range.
    ends: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
}

/// Single-threaded operation record.
pub struct Tape {
    id: u64,
    nodes: RefCell<Nodes>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Self {
            id: NEXT_TAPE_ID.fetch_add(1, Ordering::Relaxed),
            nodes: RefCell::new(Nodes::default()),
        }
    }

    /// Registers an input variable.
    pub fn var(&self, value: f64) -> Var<'_> {
        let mut n = self.nodes.borrow_mut();
        let idx = n.ends.len() as u32;
        let end = n.parents.len() as u32;
        n.ends.push(end);
        Var {
            tape: Some(self),
            idx,
            val: value,
        }
    }

    pub fn vars(&self, values: &[f64]) -> Vec<Var<'_>> {
        values.iter().map(|&v| self.var(v)).collect()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Drops all nodes, keeping allocations for reuse.
    pub fn clear(&mut self) {
        let n = self.nodes.get_mut();
        n.ends.clear();
        n.parents.clear();
        n.partials.clear();
    }

    fn push(&self, val: f64, edges: impl IntoIterator<Item = (u32, f64)>) -> Var<'_> {
        let mut n = self.nodes.borrow_mut();
        for (p, d) in edges {
            if d != 0.0 {
                n.parents.push(p);
                n.partials.push(d);
            }
        }
        let idx = n.ends.len() as u32;
        let end = n.parents.len() as u32;
        n.ends.push(end);
        Var {
            tape: Some(self),
            idx,
            val,
        }
    }

    /// Node for `Σ a_k b_k`, written without intermediate iterators.
    fn push_dot<'a>(&'a self, val: f64, a: &[Var<'a>], b: &[Var<'a>]) -> Var<'a> {
        let mut guard = self.nodes.borrow_mut();
        let n = &mut *guard;
        n.parents.reserve(2 * a.len());
        n.partials.reserve(2 * a.len());
        for (x, y) in a.iter().zip(b) {
            if x.tape.is_some() && y.val != 0.0 {
                n.parents.push(x.idx);
                n.partials.push(y.val);
            }
            if y.tape.is_some() && x.val != 0.0 {
                n.parents.push(y.idx);
                n.partials.push(x.val);
            }
        }
        let idx = n.ends.len() as u32;
        n.ends.push(n.parents.len() as u32);
        Var {
            tape: Some(self),
            idx,
            val,
        }
    }

    /// Backward sweep from `output`, returning adjoints of every node.
    pub fn gradient(&self, output: Var<'_>) -> Result<Gradients> {
        let mut adj = Vec::new();
        self.gradient_into(output, &mut adj)?;
        Ok(Gradients {
            tape_id: self.id,
            adjoints: adj,
        })
    }

    /// Like [`Tape::gradient`] but writes into a caller-owned buffer.
    pub fn gradient_into(&self, output: Var<'_>, adj: &mut Vec<f64>) -> Result<()> {
        let out = match output.tape {
            Some(t) if t.id == self.id => output.idx as usize,
            _ => {
                return Err(Error::InvalidArgument(
                    "output is not recorded on this tape".into(),
                ))
            }
        };
        let n = self.nodes.borrow();
        adj.clear();
        adj.resize(out + 1, 0.0);
        adj[out] = 1.0;
        for i in (0..=out).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let start = if i == 0 { 0 } else { n.ends[i - 1] as usize };
            let end = n.ends[i] as usize;
            for k in start..end {
                adj[n.parents[k] as usize] += a * n.partials[k];
            }
        }
        adj.resize(n.ends.len(), 0.0);
        Ok(())
    }
}

/// Adjoints produced by one backward sweep.
pub struct Gradients {
    tape_id: u64,
    adjoints: Vec<f64>,
}

impl Gradients {
    /// Derivative of the swept output with respect to `var`.
    pub fn wrt(&self, var: &Var<'_>) -> Result<f64> {
        match var.tape {
            Some(t) if t.id == self.tape_id => Ok(self.adjoints[var.idx as usize]),
            _ => Err(Error::InvalidArgument(
                "variable is not registered on the differentiated tape".into(),
            )),
        }
    }

    pub fn wrt_all(&self, vars: &[Var<'_>]) -> Result<Vec<f64>> {
        vars.iter().map(|v| self.wrt(v)).collect()
    }
}

/// A scalar that records its computation history on a [`Tape`]. Constants
/// carry no tape and record nothing.
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: Option<&'t Tape>,
    idx: u32,
    val: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.tape {
            Some(_) => write!(f, "Var(#{}: {})", self.idx, self.val),
            None => write!(f, "Var(const {})", self.val),
        }
    }
}

impl<'t> Var<'t> {
    pub fn constant(val: f64) -> Self {
        Var {
            tape: None,
            idx: u32::MAX,
            val,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.tape.is_none()
    }

    /// Position on the tape, `None` for constants.
    pub fn index(&self) -> Option<usize> {
        self.tape.map(|_| self.idx as usize)
    }

    #[inline]
    fn unary(self, val: f64, d: f64) -> Self {
        match self.tape {
            None => Var::constant(val),
            Some(t) => t.push(val, [(self.idx, d)]),
        }
    }

    #[inline]
    fn binary(a: Self, b: Self, val: f64, da: f64, db: f64) -> Self {
        match (a.tape, b.tape) {
            (None, None) => Var::constant(val),
            (Some(t), None) => t.push(val, [(a.idx, da)]),
            (None, Some(t)) => t.push(val, [(b.idx, db)]),
            (Some(t), Some(u)) => {
                debug_assert_eq!(t.id, u.id, "mixing variables from different tapes");
                if a.idx == b.idx {
                    t.push(val, [(a.idx, da + db)])
                } else {
                    t.push(val, [(a.idx, da), (b.idx, db)])
                }
            }
        }
    }
}

impl<'t> Add for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Var::binary(self, rhs, self.val + rhs.val, 1.0, 1.0)
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Var::binary(self, rhs, self.val - rhs.val, 1.0, -1.0)
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Var::binary(self, rhs, self.val * rhs.val, rhs.val, self.val)
    }
}

impl<'t> Div for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let q = self.val / rhs.val;
        Var::binary(self, rhs, q, 1.0 / rhs.val, -q / rhs.val)
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.unary(-self.val, -1.0)
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: f64) -> Self {
        self.unary(self.val + rhs, 1.0)
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: f64) -> Self {
        self.unary(self.val - rhs, 1.0)
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        self.unary(self.val * rhs, rhs)
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: f64) -> Self {
        self.unary(self.val / rhs, 1.0 / rhs)
    }
}

impl<'t> Scalar for Var<'t> {
    const RECORDS: bool = true;

    fn cst(v: f64) -> Self {
        Var::constant(v)
    }

    #[inline]
    fn value(&self) -> f64 {
        self.val
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        self.unary(e, e)
    }

    fn ln(self) -> Self {
        self.unary(self.val.ln(), 1.0 / self.val)
    }

    fn sqrt(self) -> Self {
        let s = self.val.sqrt();
        self.unary(s, 0.5 / s)
    }

    fn sin(self) -> Self {
        self.unary(self.val.sin(), self.val.cos())
    }

    fn cos(self) -> Self {
        self.unary(self.val.cos(), -self.val.sin())
    }

    fn tanh(self) -> Self {
        let t = self.val.tanh();
        self.unary(t, 1.0 - t * t)
    }

    fn sigmoid(self) -> Self {
        let s = sigmoid_f64(self.val);
        self.unary(s, s * (1.0 - s))
    }

    fn softplus(self) -> Self {
        self.unary(softplus_f64(self.val), sigmoid_f64(self.val))
    }

    fn dot(a: &[Self], b: &[Self]) -> Self {
        debug_assert_eq!(a.len(), b.len());
        let val: f64 = a.iter().zip(b).map(|(x, y)| x.val * y.val).sum();
        match a.iter().chain(b).find_map(|v| v.tape) {
            None => Var::constant(val),
            Some(t) => t.push_dot(val, a, b),
        }
    }

    fn sum(xs: &[Self]) -> Self {
        let val: f64 = xs.iter().map(|x| x.val).sum();
        match xs.iter().find_map(|v| v.tape) {
            None => Var::constant(val),
            Some(t) => t.push(
                val,
                xs.iter().filter(|x| x.tape.is_some()).map(|x| (x.idx, 1.0)),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_gradient() {
        let tape = Tape::new();
        let p = tape.vars(&[3.0, 5.0]);
        let y = p[0] * p[1];
        let g = tape.gradient(y).unwrap();
        assert_eq!(g.wrt_all(&p).unwrap(), vec![5.0, 3.0]);
    }

    #[test]
    fn reused_variable_accumulates() {
        let tape = Tape::new();
        let x = tape.var(3.0);
        let y = x * x + x * 2.0;
        let g = tape.gradient(y).unwrap();
        assert_eq!(g.wrt(&x).unwrap(), 8.0);
    }

    #[test]
    fn dot_and_sum_nodes() {
        let tape = Tape::new();
        let a = tape.vars(&[1.0, 2.0, 3.0]);
        let b = vec![Var::constant(4.0), tape.var(5.0), Var::constant(6.0)];
        let d = Var::dot(&a, &b);
        assert_eq!(d.value(), 32.0);
        let g = tape.gradient(d).unwrap();
        assert_eq!(g.wrt_all(&a).unwrap(), vec![4.0, 5.0, 6.0]);
        assert_eq!(g.wrt(&b[1]).unwrap(), 2.0);
        let s = Var::sum(&a);
        let g = tape.gradient(s).unwrap();
        assert_eq!(g.wrt_all(&a).unwrap(), vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn foreign_variables_are_rejected() {
        let t1 = Tape::new();
        let t2 = Tape::new();
        let x = t1.var(1.0);
        let y = t2.var(2.0);
        let g = t1.gradient(x * 2.0).unwrap();
        assert!(g.wrt(&y).is_err());
        assert!(g.wrt(&Var::constant(1.0)).is_err());
        assert!(t2.gradient(x).is_err());
    }

    #[test]
    fn constants_record_nothing() {
        let tape = Tape::new();
        let _x = tape.var(1.0);
        let c = Var::constant(2.0) * Var::constant(3.0) + 1.0;
        assert_eq!(c.value(), 7.0);
        assert_eq!(tape.len(), 1);
    }
}
