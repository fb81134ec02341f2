//! Jacobian-vector products, vector-Jacobian products, and gradients.
//!
//! `jvp` extracts one Jacobian column per call (forward mode); `vjp` extracts
//! one row per call (reverse mode). Both are exact up to rounding.

use super::dual::{seed, Dual};
use super::matrix::DenseMatrix;
use super::scalar::values;
use super::tape::{Tape, Var};
use crate::error::{check_dim, Error, Result};

/// Returns `(f(z), J(z)·v)`.
pub fn jvp<F>(f: F, z: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: Fn(&[Dual<f64>]) -> Vec<Dual<f64>>,
{
    check_dim("jvp tangent", z.len(), v.len())?;
    let out = f(&seed(z, v));
    Ok((
        out.iter().map(|d| d.re).collect(),
        out.iter().map(|d| d.eps).collect(),
    ))
}

/// Returns `(f(z), uᵀ·J(z))`.
pub fn vjp<F>(f: F, z: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>
where
    F: for<'t> Fn(&[Var<'t>]) -> Vec<Var<'t>>,
{
    let tape = Tape::new();
    let inputs = tape.vars(z);
    let out = f(&inputs);
    check_dim("vjp cotangent", out.len(), u.len())?;
    let weights: Vec<Var<'_>> = u.iter().map(|&w| Var::constant(w)).collect();
    let proj = <Var<'_> as super::Scalar>::dot(&out, &weights);
    let value = values(&out);
    if proj.is_constant() {
        return Ok((value, vec![0.0; z.len()]));
    }
    let g = tape.gradient(proj)?;
    Ok((value, g.wrt_all(&inputs)?))
}

/// Value and reverse-mode gradient of a scalar function of `params`.
pub fn grad<F>(loss: F, params: &[f64]) -> Result<(f64, Vec<f64>)>
where
    F: for<'t> Fn(&[Var<'t>]) -> Var<'t>,
{
    let tape = Tape::new();
    let p = tape.vars(params);
    let l = loss(&p);
    if l.is_constant() {
        return Ok((super::Scalar::value(&l), vec![0.0; params.len()]));
    }
    let g = tape.gradient(l)?;
    Ok((super::Scalar::value(&l), g.wrt_all(&p)?))
}

/// Full Jacobian by one forward pass per column.
pub fn jacobian_forward<F>(f: F, z: &[f64]) -> Result<DenseMatrix>
where
    F: Fn(&[Dual<f64>]) -> Vec<Dual<f64>>,
{
    let d = z.len();
    let mut columns = Vec::with_capacity(d);
    let mut dir = vec![0.0; d];
    for k in 0..d {
        dir[k] = 1.0;
        columns.push(jvp(&f, z, &dir)?.1);
        dir[k] = 0.0;
    }
    DenseMatrix::from_columns(&columns)
}

/// Full Jacobian by one backward sweep per output row over a single tape.
pub fn jacobian_reverse<F>(f: F, z: &[f64]) -> Result<DenseMatrix>
where
    F: for<'t> Fn(&[Var<'t>]) -> Vec<Var<'t>>,
{
    let tape = Tape::new();
    let inputs = tape.vars(z);
    let out = f(&inputs);
    let mut data = Vec::with_capacity(out.len() * z.len());
    let mut adj = Vec::new();
    for y in &out {
        if y.is_constant() {
            data.extend(std::iter::repeat_n(0.0, z.len()));
            continue;
        }
        tape.gradient_into(*y, &mut adj)?;
        data.extend(inputs.iter().map(|v| adj[v.index().expect("input var")]));
    }
    DenseMatrix::new(out.len(), z.len(), data)
}

/// Central-difference Jacobian; column `j` is
/// `(f(z + h e_j) − f(z − h e_j)) / 2h`. Truncation error is `O(h²)`.
pub fn finite_difference_jacobian<F>(f: F, z: &[f64], step: f64) -> Result<DenseMatrix>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let mut columns = Vec::with_capacity(z.len());
    let mut zp = z.to_vec();
    for j in 0..z.len() {
        zp[j] = z[j] + step;
        let fp = f(&zp);
        zp[j] = z[j] - step;
        let fm = f(&zp);
        zp[j] = z[j];
        columns.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * step))
                .collect::<Vec<_>>(),
        );
    }
    DenseMatrix::from_columns(&columns)
}
