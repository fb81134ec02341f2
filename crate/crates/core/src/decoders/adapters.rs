use std::sync::Arc;

use super::decoder::Decoder;
use crate::error::{check_dim, Error, Result};
use crate::flows::Permutation;
use crate::numerics::{DenseMatrix, Dual, Scalar, Var};

/// Reorders the latent axes of an inner decoder: column `j` of the wrapped
/// Jacobian is column `perm[j]` of the inner one.
#[derive(Clone)]
pub struct PermutedDecoder {
    inner: Arc<dyn Decoder>,
    perm: Permutation,
}

impl PermutedDecoder {
    pub fn new(inner: Arc<dyn Decoder>, perm: Vec<usize>) -> Result<Self> {
        check_dim("latent permutation", inner.latent_dim(), perm.len())?;
        Ok(Self {
            inner,
            perm: Permutation::new(perm)?,
        })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm.perm
    }

    /// Inner latent `w` with `w[perm[j]] = z[j]`.
    fn inner_latent<T: Scalar>(&self, z: &[T]) -> Vec<T> {
        self.perm.inverse(z)
    }
}

impl Decoder for PermutedDecoder {
    fn name(&self) -> String {
        format!("{}+perm", self.inner.name())
    }

    fn latent_dim(&self) -> usize {
        self.inner.latent_dim()
    }

    fn data_dim(&self) -> usize {
        self.inner.data_dim()
    }

    fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("permuted decoder input", self.latent_dim(), z.len())?;
        self.inner.decode(&self.inner_latent(z))
    }

    fn decode_dual(&self, z: &[Dual<f64>]) -> Result<Vec<Dual<f64>>> {
        check_dim("permuted decoder input", self.latent_dim(), z.len())?;
        self.inner.decode_dual(&self.inner_latent(z))
    }

    fn decode_var<'t>(&self, z: &[Var<'t>]) -> Result<Vec<Var<'t>>> {
        check_dim("permuted decoder input", self.latent_dim(), z.len())?;
        self.inner.decode_var(&self.inner_latent(z))
    }

    fn analytic_jacobian(&self, z: &[f64]) -> Option<Result<DenseMatrix>> {
        if let Err(e) = check_dim("permuted decoder input", self.latent_dim(), z.len()) {
            return Some(Err(e));
        }
        let j = self.inner.analytic_jacobian(&self.inner_latent(z))?;
        Some(j.map(|j| j.select_columns(&self.perm.perm)))
    }

    fn has_analytic_jacobian(&self) -> bool {
        self.inner.has_analytic_jacobian()
    }

    fn has_encoder(&self) -> bool {
        self.inner.has_encoder()
    }

    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.perm.forward(&self.inner.encode(x)?))
    }
}

/// Composes an inner decoder with a fixed data-space matrix: `x = Q g(z)`.
#[derive(Clone)]
pub struct RotatedDecoder {
    inner: Arc<dyn Decoder>,
    rotation: DenseMatrix,
}

impl RotatedDecoder {
    pub fn new(inner: Arc<dyn Decoder>, rotation: DenseMatrix) -> Result<Self> {
        if rotation.shape() != (inner.data_dim(), inner.data_dim()) {
            return Err(Error::Dimension {
                context: "data-space rotation",
                expected: inner.data_dim(),
                actual: rotation.rows(),
            });
        }
        Ok(Self { inner, rotation })
    }

    fn rotate<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        (0..self.rotation.rows())
            .map(|i| {
                let mut acc = T::cst(0.0);
                for (v, q) in x.iter().zip(self.rotation.row(i)) {
                    acc = acc + *v * *q;
                }
                acc
            })
            .collect()
    }
}

impl Decoder for RotatedDecoder {
    fn name(&self) -> String {
        format!("{}+rot", self.inner.name())
    }

    fn latent_dim(&self) -> usize {
        self.inner.latent_dim()
    }

    fn data_dim(&self) -> usize {
        self.inner.data_dim()
    }

    fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.rotate(&self.inner.decode(z)?))
    }

    fn decode_dual(&self, z: &[Dual<f64>]) -> Result<Vec<Dual<f64>>> {
        Ok(self.rotate(&self.inner.decode_dual(z)?))
    }

    fn decode_var<'t>(&self, z: &[Var<'t>]) -> Result<Vec<Var<'t>>> {
        Ok(self.rotate(&self.inner.decode_var(z)?))
    }

    fn analytic_jacobian(&self, z: &[f64]) -> Option<Result<DenseMatrix>> {
        let j = self.inner.analytic_jacobian(z)?;
        Some(j.and_then(|j| self.rotation.matmul(&j)))
    }

    fn has_analytic_jacobian(&self) -> bool {
        self.inner.has_analytic_jacobian()
    }

    fn has_encoder(&self) -> bool {
        self.inner.has_encoder()
    }

    /// Assumes the matrix is orthogonal, so its inverse is the transpose.
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner.encode(&self.rotation.tr_matvec(x)?)
    }
}
