use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::layers::{CouplingLayer, Layer, OrthogonalLayer, Standardize};
use super::mlp::{Activation, MlpShape};
use super::spline::{raw_param_count, DEFAULT_BINS, DEFAULT_TAIL_BOUND};
use crate::error::{check_dim, Error, Result};
use crate::numerics::{constants, Scalar};

/// Recipe for a freshly initialized spline flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowArchitecture {
    pub dim: usize,
    pub blocks: usize,
    pub bins: usize,
    pub tail_bound: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub final_rotation: bool,
    pub seed: u64,
}

impl Default for FlowArchitecture {
    fn default() -> Self {
        Self {
            dim: 2,
            blocks: 8,
            bins: DEFAULT_BINS,
            tail_bound: DEFAULT_TAIL_BOUND,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            final_rotation: true,
            seed: 0,
        }
    }
}

/// Stack of invertible layers with all trainable parameters in one flat
/// vector. `encode` maps data to latents (`f`), `decode` maps back (`g`).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    dim: usize,
    layers: Vec<Layer>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl FlowModel {
    /// Assembles a model from layers and a packed parameter vector.
    pub fn from_parts(dim: usize, layers: Vec<Layer>, params: Vec<f64>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut off = 0;
        for layer in &layers {
            validate_layer(dim, layer)?;
            offsets.push(off);
            off += layer.param_count();
        }
        offsets.push(off);
        check_dim("flow parameter vector", off, params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("flow parameters".into()));
        }
        Ok(Self {
            dim,
            layers,
            offsets,
            params,
        })
    }

    /// Builds an identity-initialized model: spline conditioners output zero
    /// and rotation reflections come in cancelling pairs.
    pub fn new(arch: &FlowArchitecture) -> Result<Self> {
        let d = arch.dim;
        if d < 2 {
            return Err(Error::InvalidArgument(
                "coupling flows need dim >= 2".into(),
            ));
        }
        if arch.bins < 1 {
            return Err(Error::InvalidArgument(
                "spline needs at least one bin".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(arch.seed);
        let mut layers = Vec::new();
        let mut params = Vec::new();
        let mut order: Vec<usize> = (0..d).collect();
        for b in 0..arch.blocks {
            if b % 2 == 0 {
                order.shuffle(&mut rng);
            }
            let half = d / 2;
            let (mut condition, mut transform) = if b % 2 == 0 {
                (order[..half].to_vec(), order[half..].to_vec())
            } else {
                (order[half..].to_vec(), order[..half].to_vec())
            };
            condition.sort_unstable();
            transform.sort_unstable();
            let mut widths = vec![condition.len()];
            widths.extend(&arch.hidden);
            widths.push(transform.len() * raw_param_count(arch.bins));
            let conditioner = MlpShape::new(widths, arch.activation)?;
            params.extend(conditioner.init_params(&mut rng, 0.0));
            layers.push(Layer::Coupling(CouplingLayer {
                condition,
                transform,
                conditioner,
                bins: arch.bins,
                bound: arch.tail_bound,
            }));
        }
        if arch.final_rotation {
            let reflections = d + d % 2;
            for _ in 0..reflections / 2 {
                let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                params.extend(&v);
                params.extend(&v);
            }
            layers.push(Layer::Orthogonal(OrthogonalLayer {
                dim: d,
                reflections,
            }));
        }
        Self::from_parts(d, layers, params)
    }

    /// Prepends a fixed data standardization.
    pub fn with_standardization(mut self, standardize: Standardize) -> Result<Self> {
        check_dim("standardization", self.dim, standardize.shift.len())?;
        self.layers.insert(0, Layer::Standardize(standardize));
        self.offsets.insert(0, 0);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        check_dim("flow parameter vector", self.params.len(), params.len())?;
        self.params = params;
        Ok(())
    }

    fn layer_params<'a, T>(&self, params: &'a [T], i: usize) -> &'a [T] {
        &params[self.offsets[i]..self.offsets[i] + self.layers[i].param_count()]
    }

    /// Encoder over an arbitrary parameter/scalar kind. Returns `z = f(x)` and
    /// `log |det ∂f/∂x|`.
    pub fn encode_with<T: Scalar>(&self, params: &[T], x: &[T]) -> Result<(Vec<T>, T)> {
        check_dim("flow input", self.dim, x.len())?;
        check_dim("flow parameter vector", self.params.len(), params.len())?;
        let mut h = x.to_vec();
        let mut terms = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let (next, ld) = layer
                .forward(self.layer_params(params, i), &h)
                .map_err(|e| layer_error(i, layer, e))?;
            check_finite(i, layer, &next, ld)?;
            terms.push(ld);
            h = next;
        }
        Ok((h, T::sum(&terms)))
    }

    /// Decoder over an arbitrary parameter/scalar kind. Returns `x = g(z)` and
    /// `log |det ∂g/∂z|`.
    pub fn decode_with<T: Scalar>(&self, params: &[T], z: &[T]) -> Result<(Vec<T>, T)> {
        check_dim("flow input", self.dim, z.len())?;
        check_dim("flow parameter vector", self.params.len(), params.len())?;
        let mut h = z.to_vec();
        let mut terms = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (next, ld) = layer
                .inverse(self.layer_params(params, i), &h)
                .map_err(|e| layer_error(i, layer, e))?;
            check_finite(i, layer, &next, ld)?;
            terms.push(ld);
            h = next;
        }
        Ok((h, T::sum(&terms)))
    }

    pub fn encode(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.encode_with(&self.params, x)
    }

    pub fn decode(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.decode_with(&self.params, z)?.0)
    }

    /// Decoder that also returns `log |det ∂g/∂z|`.
    pub fn decode_with_log_det(&self, z: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.decode_with(&self.params, z)
    }

    /// Parameters lifted to another scalar kind as constants.
    pub fn params_as<T: Scalar>(&self) -> Vec<T> {
        constants(&self.params)
    }
}

fn validate_layer(dim: usize, layer: &Layer) -> Result<()> {
    let ok = match layer {
        Layer::Coupling(c) => {
            let mut all: Vec<usize> = c.condition.iter().chain(&c.transform).copied().collect();
            all.sort_unstable();
            all.dedup();
            all.len() == c.condition.len() + c.transform.len()
                && all.iter().all(|&i| i < dim)
                && !c.transform.is_empty()
                && c.conditioner.input_dim() == c.condition.len()
                && c.conditioner.output_dim() == c.transform.len() * raw_param_count(c.bins)
                && c.bound > 0.0
        }
        Layer::Orthogonal(o) => o.dim == dim,
        Layer::Permutation(p) => p.perm.len() == dim,
        Layer::Standardize(s) => s.shift.len() == dim,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Format(format!(
            "{} layer is inconsistent with flow dimension {dim}",
            layer.kind()
        )))
    }
}

fn layer_error(i: usize, layer: &Layer, e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::NonFinite(format!("layer {i} ({}): {what}", layer.kind())),
        other => other,
    }
}

fn check_finite<T: Scalar>(i: usize, layer: &Layer, h: &[T], ld: T) -> Result<()> {
    if h.iter().all(|v| v.value().is_finite()) && ld.value().is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!(
            "layer {i} ({}) output",
            layer.kind()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perturbed(arch: &FlowArchitecture, scale: f64, seed: u64) -> FlowModel {
        let mut m = FlowModel::new(arch).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = m
            .params()
            .iter()
            .map(|v| v + scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        m.set_params(p).unwrap();
        m
    }

    #[test]
    fn fresh_model_is_identity() {
        let arch = FlowArchitecture {
            hidden: vec![8, 8],
            ..Default::default()
        };
        let m = FlowModel::new(&arch).unwrap();
        let (z, ld) = m.encode(&[0.7, -1.3]).unwrap();
        assert!((z[0] - 0.7).abs() < 1e-12 && (z[1] + 1.3).abs() < 1e-12);
        assert!(ld.abs() < 1e-12);
    }

    #[test]
    fn masks_alternate_between_blocks() {
        let arch = FlowArchitecture {
            dim: 6,
            blocks: 4,
            hidden: vec![4],
            ..Default::default()
        };
        let m = FlowModel::new(&arch).unwrap();
        let couplings: Vec<&CouplingLayer> = m
            .layers()
            .iter()
            .filter_map(|l| match l {
                Layer::Coupling(c) => Some(c),
                _ => None,
            })
            .collect();
        assert_eq!(couplings.len(), 4);
        assert_eq!(couplings[0].condition, couplings[1].transform);
        assert_eq!(couplings[2].condition, couplings[3].transform);
    }

    #[test]
    fn round_trip_on_perturbed_model() {
        let arch = FlowArchitecture {
            dim: 3,
            blocks: 4,
            hidden: vec![16, 16],
            seed: 5,
            ..Default::default()
        };
        let m = perturbed(&arch, 0.3, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let z: Vec<f64> = (0..3)
                .map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let (x, ld_dec) = m.decode_with_log_det(&z).unwrap();
            let (zr, ld_enc) = m.encode(&x).unwrap();
            for (a, b) in z.iter().zip(&zr) {
                assert!((a - b).abs() < 1e-9);
            }
            assert!((ld_dec + ld_enc).abs() < 1e-9);
        }
    }

    #[test]
    fn rotation_only_model_preserves_volume() {
        let arch = FlowArchitecture {
            dim: 3,
            blocks: 0,
            seed: 2,
            ..Default::default()
        };
        let m = perturbed(&arch, 1.0, 4);
        let (z, ld) = m.encode(&[1.0, 2.0, -0.5]).unwrap();
        assert!(ld == 0.0);
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        assert!((norm(&z) - 5.25).abs() < 1e-12);
    }

    #[test]
    fn non_finite_input_names_layer() {
        let arch = FlowArchitecture {
            hidden: vec![4],
            blocks: 2,
            ..Default::default()
        };
        let m = FlowModel::new(&arch).unwrap();
        match m.encode(&[f64::NAN, 0.0]) {
            Err(Error::NonFinite(msg)) => assert!(msg.contains("layer"), "{msg}"),
            other => panic!("expected non-finite error, got {other:?}"),
        }
        assert!(m.encode(&[1.0]).is_err());
    }
}
