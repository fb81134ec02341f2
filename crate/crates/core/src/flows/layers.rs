use serde::{Deserialize, Serialize};

use super::mlp::MlpShape;
use super::spline::{raw_param_count, rqs_forward, rqs_inverse, RqsSpline};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Scalar};

/// Spline coupling block: coordinates in `transform` pass through a monotone
/// spline whose parameters are produced by an MLP reading the `condition`
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingLayer {
    pub condition: Vec<usize>,
    pub transform: Vec<usize>,
    pub conditioner: MlpShape,
    pub bins: usize,
    pub bound: f64,
}

impl CouplingLayer {
    pub fn param_count(&self) -> usize {
        self.conditioner.param_count()
    }

    fn splines<T: Scalar>(&self, params: &[T], x: &[T]) -> Result<Vec<RqsSpline<T>>> {
        let cond: Vec<T> = self.condition.iter().map(|&i| x[i]).collect();
        let raw = self.conditioner.forward(params, &cond);
        let per = raw_param_count(self.bins);
        raw.chunks(per)
            .map(|c| RqsSpline::from_packed(self.bound, c))
            .collect()
    }

    pub fn forward<T: Scalar>(&self, params: &[T], x: &[T]) -> Result<(Vec<T>, T)> {
        let splines = self.splines(params, x)?;
        let mut y = x.to_vec();
        let mut logdet = Vec::with_capacity(self.transform.len());
        for (&i, s) in self.transform.iter().zip(&splines) {
            let (v, ld) = rqs_forward(x[i], s)?;
            y[i] = v;
            logdet.push(ld);
        }
        Ok((y, T::sum(&logdet)))
    }

    pub fn inverse<T: Scalar>(&self, params: &[T], y: &[T]) -> Result<(Vec<T>, T)> {
        // conditioning coordinates are untouched, so the splines can be rebuilt
        // from the output side
        let splines = self.splines(params, y)?;
        let mut x = y.to_vec();
        let mut logdet = Vec::with_capacity(self.transform.len());
        for (&i, s) in self.transform.iter().zip(&splines) {
            let (v, ld) = rqs_inverse(y[i], s)?;
            x[i] = v;
            logdet.push(ld);
        }
        Ok((x, T::sum(&logdet)))
    }
}

/// Product of Householder reflections `Q = H_{m-1} ⋯ H_0`, with one trainable
/// vector per reflection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalLayer {
    pub dim: usize,
    pub reflections: usize,
}

fn reflect<T: Scalar>(v: &[T], x: &mut [T]) {
    let vv = T::dot(v, v);
    if vv.value() <= f64::MIN_POSITIVE {
        return;
    }
    let f = T::dot(v, x) * 2.0 / vv;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi = *xi - f * *vi;
    }
}

impl OrthogonalLayer {
    pub fn param_count(&self) -> usize {
        self.dim * self.reflections
    }

    pub fn forward<T: Scalar>(&self, params: &[T], x: &[T]) -> Vec<T> {
        let mut y = x.to_vec();
        for v in params.chunks(self.dim) {
            reflect(v, &mut y);
        }
        y
    }

    pub fn inverse<T: Scalar>(&self, params: &[T], y: &[T]) -> Vec<T> {
        let mut x = y.to_vec();
        for v in params.chunks(self.dim).rev() {
            reflect(v, &mut x);
        }
        x
    }

    /// The matrix `Q` applied by [`OrthogonalLayer::forward`].
    pub fn matrix(&self, params: &[f64]) -> DenseMatrix {
        let mut q = DenseMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[j] = 1.0;
            q.set_column(j, &self.forward(params, &e));
        }
        q
    }
}

/// Fixed coordinate permutation: `y[i] = x[perm[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation {
    pub perm: Vec<usize>,
}

impl Permutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidArgument(format!(
                    "not a permutation: {perm:?}"
                )));
            }
            seen[p] = true;
        }
        Ok(Self { perm })
    }

    pub fn forward<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| x[p]).collect()
    }

    pub fn inverse<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        let mut x = y.to_vec();
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Fixed per-coordinate standardization `(x - shift) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardize {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardize {
    pub fn new(shift: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if shift.len() != scale.len() {
            return Err(Error::Dimension {
                context: "standardization",
                expected: shift.len(),
                actual: scale.len(),
            });
        }
        if scale.iter().any(|s| !(*s > 0.0) || !s.is_finite())
            || shift.iter().any(|s| !s.is_finite())
        {
            return Err(Error::InvalidArgument(
                "standardization needs finite shifts and positive scales".into(),
            ));
        }
        Ok(Self { shift, scale })
    }

    pub fn log_det(&self) -> f64 {
        -self.scale.iter().map(|s| s.ln()).sum::<f64>()
    }

    pub fn forward<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(&v, (m, s))| (v - *m) / *s)
            .collect()
    }

    pub fn inverse<T: Scalar>(&self, y: &[T]) -> Vec<T> {
        y.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(&v, (m, s))| v * *s + *m)
            .collect()
    }
}

/// One invertible stage of a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Coupling(CouplingLayer),
    Orthogonal(OrthogonalLayer),
    Permutation(Permutation),
    Standardize(Standardize),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Coupling(_) => "coupling",
            Layer::Orthogonal(_) => "orthogonal",
            Layer::Permutation(_) => "permutation",
            Layer::Standardize(_) => "standardize",
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Coupling(c) => c.param_count(),
            Layer::Orthogonal(o) => o.param_count(),
            Layer::Permutation(_) | Layer::Standardize(_) => 0,
        }
    }

    /// Data-to-latent direction; returns the output and `log |det ∂y/∂x|`.
    pub fn forward<T: Scalar>(&self, params: &[T], x: &[T]) -> Result<(Vec<T>, T)> {
        Ok(match self {
            Layer::Coupling(c) => c.forward(params, x)?,
            Layer::Orthogonal(o) => (o.forward(params, x), T::cst(0.0)),
            Layer::Permutation(p) => (p.forward(x), T::cst(0.0)),
            Layer::Standardize(s) => (s.forward(x), T::cst(s.log_det())),
        })
    }

    /// Latent-to-data direction; returns the output and `log |det ∂x/∂y|`.
    pub fn inverse<T: Scalar>(&self, params: &[T], y: &[T]) -> Result<(Vec<T>, T)> {
        Ok(match self {
            Layer::Coupling(c) => c.inverse(params, y)?,
            Layer::Orthogonal(o) => (o.inverse(params, y), T::cst(0.0)),
            Layer::Permutation(p) => (p.inverse(y), T::cst(0.0)),
            Layer::Standardize(s) => (s.inverse(y), T::cst(-s.log_det())),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn householder_product_is_orthogonal() {
        let layer = OrthogonalLayer {
            dim: 3,
            reflections: 3,
        };
        let params = [0.3, -1.0, 2.0, 1.5, 0.2, -0.7, -0.4, 0.9, 0.1];
        let q = layer.matrix(&params);
        let qtq = q.transpose().matmul(&q).unwrap();
        assert!(qtq.max_abs_diff(&DenseMatrix::identity(3)) < 1e-14);
        let x = [0.5, -2.0, 1.0];
        let back = layer.inverse(&params, &layer.forward(&params, &x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn paired_reflections_cancel() {
        let layer = OrthogonalLayer {
            dim: 2,
            reflections: 2,
        };
        let params = [0.6, -0.8, 0.6, -0.8];
        let y = layer.forward(&params, &[1.25, -3.0]);
        assert!((y[0] - 1.25).abs() < 1e-15 && (y[1] + 3.0).abs() < 1e-15);
    }

    #[test]
    fn permutation_round_trip() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let y = p.forward(&[10.0, 20.0, 30.0]);
        assert_eq!(y, vec![30.0, 10.0, 20.0]);
        assert_eq!(p.inverse(&y), vec![10.0, 20.0, 30.0]);
        assert!(Permutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn standardize_log_det() {
        let s = Standardize::new(vec![1.0, -1.0], vec![2.0, 0.5]).unwrap();
        assert!(s.log_det().abs() < 1e-15);
        let (y, ld) = Layer::Standardize(s.clone())
            .forward::<f64>(&[], &[3.0, 0.0])
            .unwrap();
        assert_eq!(y, vec![1.0, 2.0]);
        assert_eq!(ld, s.log_det());
        assert!(Standardize::new(vec![0.0], vec![0.0]).is_err());
    }
}
