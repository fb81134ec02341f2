//! Factorization kernels behind the log-volume queries.
//!
//! Rectangular volumes use Householder orthogonalization on the columns
//! directly; the Gram product `MᵀM` is never formed. Square determinants use
//! LU with partial pivoting.

use super::matrix::DenseMatrix;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// A column block is degenerate when a factor diagonal falls below this
/// fraction of the largest column norm.
pub const RANK_TOLERANCE: f64 = 1e-12;

fn column_major(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.cols()).map(|j| m.column(j)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Diagonal of `R` from a Householder QR of `m` (rows ≥ cols). Signs follow
/// the reflection convention and are not normalized.
fn householder_r_diagonal(m: &DenseMatrix) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut a = column_major(m);
    let mut diag = Vec::with_capacity(cols);
    for k in 0..cols {
        let alpha_norm = norm(&a[k][k..]);
        if alpha_norm == 0.0 {
            diag.push(0.0);
            continue;
        }
        let alpha = if a[k][k] >= 0.0 {
            -alpha_norm
        } else {
            alpha_norm
        };
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag.push(alpha);
        if vnorm2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().take(cols).skip(k + 1) {
            let dot: f64 = v.iter().zip(&col[k..rows]).map(|(x, y)| x * y).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in col[k..rows].iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
    }
    diag
}

/// `log det(MᵀM)^{1/2}` for a full-column-rank `M` with rows ≥ cols.
///
/// A single column short-circuits to the log of its Euclidean norm.
pub fn gram_log_volume(m: &DenseMatrix) -> Result<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Err(Error::InvalidArgument(
            "log-volume needs at least one column".into(),
        ));
    }
    if rows < cols {
        return Err(Error::InvalidArgument(format!(
            "log-volume needs rows >= cols, got {rows}x{cols}"
        )));
    }
    if cols == 1 {
        let n = norm(&m.column(0));
        if n == 0.0 || !n.is_finite() {
            return Err(Error::DegenerateJacobian {
                columns: 1,
                index: 0,
            });
        }
        return Ok(n.ln());
    }
    let scale = (0..cols).map(|j| norm(&m.column(j))).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::DegenerateJacobian {
            columns: cols,
            index: 0,
        });
    }
    let mut total = 0.0;
    for (k, r) in householder_r_diagonal(m).into_iter().enumerate() {
        if r.abs() < RANK_TOLERANCE * scale {
            return Err(Error::DegenerateJacobian {
                columns: cols,
                index: k,
            });
        }
        total += r.abs().ln();
    }
    Ok(total)
}

/// LU factorization with partial pivoting, returned packed (unit-lower `L`
/// below the diagonal, `U` on and above) together with the row permutation and
/// its parity.
struct Lu {
    packed: DenseMatrix,
    perm: Vec<usize>,
}

fn lu_decompose(m: &DenseMatrix) -> Result<Lu> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::Dimension {
            context: "square matrix",
            expected: m.rows(),
            actual: m.cols(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let scale = (0..n).map(|j| norm(&m.column(j))).fold(0.0, f64::max);
    let mut a = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a.get(i, k).abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if scale == 0.0 || pmax < RANK_TOLERANCE * scale {
            return Err(Error::DegenerateJacobian {
                columns: n,
                index: k,
            });
        }
        if p != k {
            for j in 0..n {
                let t = a.get(k, j);
                a.set(k, j, a.get(p, j));
                a.set(p, j, t);
            }
            perm.swap(k, p);
        }
        let pivot = a.get(k, k);
        for i in k + 1..n {
            let f = a.get(i, k) / pivot;
            a.set(i, k, f);
            if f != 0.0 {
                for j in k + 1..n {
                    a.set(i, j, a.get(i, j) - f * a.get(k, j));
                }
            }
        }
    }
    Ok(Lu { packed: a, perm })
}

/// `log |det M|` for a square nonsingular matrix.
pub fn log_abs_det(m: &DenseMatrix) -> Result<f64> {
    let lu = lu_decompose(m)?;
    Ok((0..m.rows()).map(|k| lu.packed.get(k, k).abs().ln()).sum())
}

/// Solves `M x = b` for square nonsingular `M`.
pub fn solve(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = m.rows();
    if b.len() != n {
        return Err(Error::Dimension {
            context: "solve right-hand side",
            expected: n,
            actual: b.len(),
        });
    }
    let lu = lu_decompose(m)?;
    let mut y: Vec<f64> = lu.perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for j in 0..i {
            y[i] -= lu.packed.get(i, j) * y[j];
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            y[i] -= lu.packed.get(i, j) * y[j];
        }
        y[i] /= lu.packed.get(i, i);
    }
    Ok(y)
}

/// Full Householder QR: returns `(Q, R)` with `Q` square orthogonal
/// (rows × rows) and `R` upper triangular (rows × cols), `M = Q R`.
pub fn householder_qr(m: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (rows, cols) = m.shape();
    let mut r = m.clone();
    let mut q = DenseMatrix::identity(rows);
    for k in 0..cols.min(rows.saturating_sub(1)) {
        let x: Vec<f64> = (k..rows).map(|i| r.get(i, k)).collect();
        let xn = norm(&x);
        if xn == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xn } else { xn };
        let mut v = x;
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|t| t * t).sum();
        if vn2 == 0.0 {
            continue;
        }
        for j in 0..cols {
            let dot: f64 = (k..rows).map(|i| v[i - k] * r.get(i, j)).sum();
            let f = 2.0 * dot / vn2;
            for i in k..rows {
                r.set(i, j, r.get(i, j) - f * v[i - k]);
            }
        }
        // Q <- Q H_k
        for i in 0..rows {
            let dot: f64 = (k..rows).map(|l| q.get(i, l) * v[l - k]).sum();
            let f = 2.0 * dot / vn2;
            for l in k..rows {
                q.set(i, l, q.get(i, l) - f * v[l - k]);
            }
        }
    }
    (q, r)
}

/// Least-squares solution of `M x ≈ b` for full-column-rank `M`.
#[allow(clippy::needless_range_loop)]
pub fn least_squares(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (rows, cols) = m.shape();
    if b.len() != rows {
        return Err(Error::Dimension {
            context: "least-squares right-hand side",
            expected: rows,
            actual: b.len(),
        });
    }
    let (q, r) = householder_qr(m);
    let qtb = q.tr_matvec(b)?;
    let scale = (0..cols).map(|j| norm(&m.column(j))).fold(0.0, f64::max);
    let mut x = vec![0.0; cols];
    for i in (0..cols).rev() {
        let d = r.get(i, i);
        if d.abs() < RANK_TOLERANCE * scale || scale == 0.0 {
            return Err(Error::DegenerateJacobian {
                columns: cols,
                index: i,
            });
        }
        let mut s = qtb[i];
        for j in i + 1..cols {
            s -= r.get(i, j) * x[j];
        }
        x[i] = s / d;
    }
    Ok(x)
}

/// Gram log-volume of a column block held in any [`Scalar`] type, via a
/// Cholesky factor of the Gram matrix. Used where the volume itself must be
/// differentiated; evaluation-only paths use [`gram_log_volume`].
#[allow(clippy::needless_range_loop)]
pub fn gram_log_volume_scalar<T: Scalar>(columns: &[Vec<T>]) -> Result<T> {
    let k = columns.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "log-volume needs at least one column".into(),
        ));
    }
    let sq = |a: &[T], b: &[T]| T::dot(a, b);
    if k == 1 {
        let n2 = sq(&columns[0], &columns[0]);
        if !(n2.value() > 0.0) || !n2.value().is_finite() {
            return Err(Error::DegenerateJacobian {
                columns: 1,
                index: 0,
            });
        }
        return Ok(n2.ln() * 0.5);
    }
    let mut gram = vec![vec![T::cst(0.0); k]; k];
    for i in 0..k {
        for j in 0..=i {
            let g = sq(&columns[i], &columns[j]);
            gram[i][j] = g;
            gram[j][i] = g;
        }
    }
    let scale2 = (0..k).map(|i| gram[i][i].value()).fold(0.0, f64::max);
    let tol2 = RANK_TOLERANCE * RANK_TOLERANCE * scale2;
    let mut l = vec![vec![T::cst(0.0); k]; k];
    let mut log_vol = T::cst(0.0);
    for i in 0..k {
        for j in 0..=i {
            let mut s = gram[i][j];
            for p in 0..j {
                s = s - l[i][p] * l[j][p];
            }
            if i == j {
                if !(s.value() > tol2) {
                    return Err(Error::DegenerateJacobian {
                        columns: k,
                        index: i,
                    });
                }
                let d = s.sqrt();
                log_vol = log_vol + s.ln() * 0.5;
                l[i][i] = d;
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Ok(log_vol)
}
