use serde::{Deserialize, Serialize};

use super::decoder::{scalar_decode_methods, Decoder};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{DenseMatrix, Scalar};

/// Product-of-circles embedding of `n` angle/radius pairs into `2n` dimensions.
///
/// With `z ∈ R^{2n}`: `φ_j = σ^φ_j z_j`, `r_j = 1 + σ^r_j z_{n+j}`, and
/// `Φ_{2j} = r_j cos φ_j`, `Φ_{2j+1} = r_j sin φ_j`. The decoded point is
/// `(R Φ − shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusDecoder {
    pub sigma_phi: Vec<f64>,
    pub sigma_r: Vec<f64>,
    pub rotation: Option<DenseMatrix>,
    pub shift: Vec<f64>,
    pub scale: f64,
}

impl TorusDecoder {
    /// Unrotated, unnormalized torus.
    pub fn new(sigma_phi: Vec<f64>, sigma_r: Vec<f64>) -> Result<Self> {
        check_dim("torus radial scales", sigma_phi.len(), sigma_r.len())?;
        if sigma_phi.is_empty() {
            return Err(Error::InvalidArgument(
                "torus needs at least one circle".into(),
            ));
        }
        if sigma_phi
            .iter()
            .chain(&sigma_r)
            .any(|s| !(*s > 0.0) || !s.is_finite())
        {
            return Err(Error::InvalidArgument(
                "torus scales must be positive".into(),
            ));
        }
        let d = 2 * sigma_phi.len();
        Ok(Self {
            sigma_phi,
            sigma_r,
            rotation: None,
            shift: vec![0.0; d],
            scale: 1.0,
        })
    }

    pub fn with_rotation(mut self, rotation: DenseMatrix) -> Result<Self> {
        let d = self.circles() * 2;
        if rotation.shape() != (d, d) {
            return Err(Error::Dimension {
                context: "torus rotation",
                expected: d,
                actual: rotation.rows(),
            });
        }
        self.rotation = Some(rotation);
        Ok(self)
    }

    pub fn with_normalization(mut self, shift: Vec<f64>, scale: f64) -> Result<Self> {
        check_dim("torus normalization shift", self.circles() * 2, shift.len())?;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "torus scale must be positive, got {scale}"
            )));
        }
        self.shift = shift;
        self.scale = scale;
        Ok(self)
    }

    pub fn circles(&self) -> usize {
        self.sigma_phi.len()
    }

    /// The Cartesian embedding `Φ(z)` before rotation and normalization.
    pub fn embed<T: Scalar>(&self, z: &[T]) -> Result<Vec<T>> {
        let n = self.circles();
        check_dim("torus decoder input", 2 * n, z.len())?;
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            let phi = z[j] * self.sigma_phi[j];
            let r = z[n + j] * self.sigma_r[j] + 1.0;
            out.push(r * phi.cos());
            out.push(r * phi.sin());
        }
        Ok(out)
    }

    fn eval<T: Scalar>(&self, z: &[T]) -> Result<Vec<T>> {
        let phi = self.embed(z)?;
        let rotated = match &self.rotation {
            None => phi,
            Some(r) => (0..r.rows())
                .map(|i| {
                    let mut acc = T::cst(0.0);
                    for (p, a) in phi.iter().zip(r.row(i)) {
                        acc = acc + *p * *a;
                    }
                    acc
                })
                .collect(),
        };
        Ok(rotated
            .into_iter()
            .zip(&self.shift)
            .map(|(v, s)| (v - *s) / self.scale)
            .collect())
    }

    /// Jacobian of the embedding `Φ` alone (block structure, no rotation).
    pub fn embedding_jacobian(&self, z: &[f64]) -> Result<DenseMatrix> {
        let n = self.circles();
        check_dim("torus decoder input", 2 * n, z.len())?;
        let mut j = DenseMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            let phi = self.sigma_phi[k] * z[k];
            let r = 1.0 + self.sigma_r[k] * z[n + k];
            let (s, c) = phi.sin_cos();
            j.set(2 * k, k, -self.sigma_phi[k] * r * s);
            j.set(2 * k + 1, k, self.sigma_phi[k] * r * c);
            j.set(2 * k, n + k, self.sigma_r[k] * c);
            j.set(2 * k + 1, n + k, self.sigma_r[k] * s);
        }
        Ok(j)
    }
}

impl Decoder for TorusDecoder {
    fn name(&self) -> String {
        "torus".into()
    }

    fn latent_dim(&self) -> usize {
        2 * self.circles()
    }

    fn data_dim(&self) -> usize {
        2 * self.circles()
    }

    scalar_decode_methods!();

    fn analytic_jacobian(&self, z: &[f64]) -> Option<Result<DenseMatrix>> {
        Some((|| {
            let j = self.embedding_jacobian(z)?;
            let j = match &self.rotation {
                None => j,
                Some(r) => r.matmul(&j)?,
            };
            let inv = 1.0 / self.scale;
            DenseMatrix::new(
                j.rows(),
                j.cols(),
                j.into_vec().into_iter().map(|v| v * inv).collect(),
            )
        })())
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }

    fn has_encoder(&self) -> bool {
        true
    }

    /// Polar inverse; exact while every `|φ_j| < π` and `r_j > 0`.
    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.circles();
        check_dim("torus encoder input", 2 * n, x.len())?;
        let y: Vec<f64> = x
            .iter()
            .zip(&self.shift)
            .map(|(v, s)| v * self.scale + s)
            .collect();
        let phi = match &self.rotation {
            None => y,
            Some(r) => r.tr_matvec(&y)?,
        };
        let mut z = vec![0.0; 2 * n];
        for j in 0..n {
            let (a, b) = (phi[2 * j], phi[2 * j + 1]);
            z[j] = b.atan2(a) / self.sigma_phi[j];
            z[n + j] = (a.hypot(b) - 1.0) / self.sigma_r[j];
        }
        Ok(z)
    }
}
