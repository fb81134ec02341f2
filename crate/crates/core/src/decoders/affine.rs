use nalgebra::{DMatrix, SymmetricEigen};

use super::decoder::{scalar_decode_methods, Decoder};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{solve, DenseMatrix, Scalar};

/// `g(z) = A z + b`, with constant Jacobian `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDecoder {
    name: String,
    matrix: DenseMatrix,
    offset: Vec<f64>,
}

impl AffineDecoder {
    pub fn new(matrix: DenseMatrix, offset: Vec<f64>) -> Result<Self> {
        check_dim("affine offset", matrix.rows(), offset.len())?;
        if matrix.rows() < matrix.cols() {
            return Err(Error::InvalidArgument(format!(
                "decoder needs data dim >= latent dim, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if offset.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine offset".into()));
        }
        Ok(Self {
            name: "affine".into(),
            matrix,
            offset,
        })
    }

    /// `A = diag(values)`, `b = 0`.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let mut d = Self::new(DenseMatrix::diagonal(values), vec![0.0; values.len()])?;
        let v: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        d.name = format!("affine:diag:{}", v.join(","));
        Ok(d)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            name: format!("identity:{dim}"),
            matrix: DenseMatrix::identity(dim),
            offset: vec![0.0; dim],
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    fn eval<T: Scalar>(&self, z: &[T]) -> Result<Vec<T>> {
        check_dim("affine decoder input", self.matrix.cols(), z.len())?;
        Ok((0..self.matrix.rows())
            .map(|i| {
                let row = self.matrix.row(i);
                let mut acc = T::cst(self.offset[i]);
                for (zj, a) in z.iter().zip(row) {
                    if *a != 0.0 {
                        acc = acc + *zj * *a;
                    }
                }
                acc
            })
            .collect())
    }
}

impl Decoder for AffineDecoder {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn latent_dim(&self) -> usize {
        self.matrix.cols()
    }

    fn data_dim(&self) -> usize {
        self.matrix.rows()
    }

    scalar_decode_methods!();

    fn analytic_jacobian(&self, z: &[f64]) -> Option<Result<DenseMatrix>> {
        Some(
            check_dim("affine decoder input", self.matrix.cols(), z.len())
                .map(|_| self.matrix.clone()),
        )
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }

    fn has_encoder(&self) -> bool {
        self.matrix.is_square()
    }

    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        if !self.matrix.is_square() {
            return Err(Error::Capability(format!(
                "rectangular affine decoder '{}' has no encoder",
                self.name
            )));
        }
        check_dim("affine encoder input", self.matrix.rows(), x.len())?;
        let centered: Vec<f64> = x.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        solve(&self.matrix, &centered)
    }
}

/// Result of [`pca_fit`]: the decoder plus the sorted spectrum it was built from.
#[derive(Debug, Clone)]
pub struct PcaFit {
    pub decoder: AffineDecoder,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

/// Fits `A = U Λ^{1/2}`, `b = mean` from the empirical covariance of `data`
/// (one sample per row), eigenvalues sorted in descending order.
pub fn pca_fit(data: &[Vec<f64>]) -> Result<PcaFit> {
    let n = data.len();
    let d = data.first().map_or(0, Vec::len);
    if d == 0 || n <= d {
        return Err(Error::Estimation(format!(
            "PCA needs more samples than dimensions, got {n} samples of dimension {d}"
        )));
    }
    let mut mean = vec![0.0; d];
    for row in data {
        check_dim("PCA sample", d, row.len())?;
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in data {
        for i in 0..d {
            let a = row[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += a * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let largest = eig.eigenvalues[order[0]];
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    if eigenvalues.iter().any(|&l| !(l > largest * 1e-12)) {
        return Err(Error::Estimation(format!(
            "empirical covariance is rank deficient (eigenvalues {eigenvalues:?})"
        )));
    }
    let u = DenseMatrix::from_fn(d, d, |i, j| eig.eigenvectors[(i, order[j])]);
    let a = DenseMatrix::from_fn(d, d, |i, j| u.get(i, j) * eigenvalues[j].sqrt());
    let decoder = AffineDecoder::new(a, mean)?.with_name("pca");
    Ok(PcaFit {
        decoder,
        eigenvalues,
        eigenvectors: u,
    })
}
