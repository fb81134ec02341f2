use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
    Softplus,
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::Relu => {
                if x.value() > 0.0 {
                    x
                } else {
                    T::cst(0.0)
                }
            }
            Activation::Softplus => x.softplus(),
            Activation::Sigmoid => x.sigmoid(),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Softplus => "softplus",
            Activation::Sigmoid => "sigmoid",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Relu => 2,
            Activation::Softplus => 3,
            Activation::Sigmoid => 4,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            0 => Activation::Identity,
            1 => Activation::Tanh,
            2 => Activation::Relu,
            3 => Activation::Softplus,
            4 => Activation::Sigmoid,
            other => return Err(Error::Format(format!("unknown activation code {other}"))),
        })
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" | "linear" => Activation::Identity,
            "tanh" => Activation::Tanh,
            "relu" => Activation::Relu,
            "softplus" => Activation::Softplus,
            "sigmoid" => Activation::Sigmoid,
            other => return Err(Error::Format(format!("unknown activation '{other}'"))),
        })
    }
}

/// Shape of a fully connected network. `widths` includes the input and output
/// sizes. Parameters are laid out per layer as a row-major `out × in` weight
/// block followed by the `out` biases. The activation is applied after every
/// layer except the last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

impl MlpShape {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "MLP needs at least two positive widths, got {widths:?}"
            )));
        }
        Ok(Self { widths, activation })
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("nonempty widths")
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Weight/bias ranges per layer.
    pub fn layer_ranges(&self) -> Vec<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let wr = off..off + w[0] * w[1];
                let br = wr.end..wr.end + w[1];
                off = br.end;
                (wr, br)
            })
            .collect()
    }

    pub fn forward<T: Scalar>(&self, params: &[T], input: &[T]) -> Vec<T> {
        debug_assert_eq!(params.len(), self.param_count());
        debug_assert_eq!(input.len(), self.input_dim());
        let ranges = self.layer_ranges();
        let last = ranges.len() - 1;
        let mut h = input.to_vec();
        for (layer, (wr, br)) in ranges.into_iter().enumerate() {
            let n_in = h.len();
            let weights = &params[wr];
            let biases = &params[br];
            let mut next = Vec::with_capacity(biases.len());
            for (o, b) in biases.iter().enumerate() {
                let pre = T::dot(&weights[o * n_in..(o + 1) * n_in], &h) + *b;
                next.push(if layer == last {
                    pre
                } else {
                    self.activation.apply(pre)
                });
            }
            h = next;
        }
        h
    }

    /// LeCun-normal hidden weights, zero biases. The last layer is scaled by
    /// `output_scale` (zero gives a network that outputs exactly zero).
    pub fn init_params<R: Rng>(&self, rng: &mut R, output_scale: f64) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        let ranges = self.layer_ranges();
        let last = ranges.len() - 1;
        for (layer, (wr, _)) in ranges.into_iter().enumerate() {
            let fan_in = self.widths[layer] as f64;
            let scale = if layer == last { output_scale } else { 1.0 } / fan_in.sqrt();
            for p in &mut params[wr] {
                let g: f64 = rng.sample(StandardNormal);
                *p = if scale == 0.0 { 0.0 } else { g * scale };
            }
        }
        params
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn param_layout() {
        let s = MlpShape::new(vec![2, 3, 1], Activation::Tanh).unwrap();
        assert_eq!(s.param_count(), 2 * 3 + 3 + 3 + 1);
        let ranges = s.layer_ranges();
        assert_eq!(ranges[0].0, 0..6);
        assert_eq!(ranges[0].1, 6..9);
        assert_eq!(ranges[1].0, 9..12);
        assert_eq!(ranges[1].1, 12..13);
    }

    #[test]
    fn forward_hand_evaluation() {
        let s = MlpShape::new(vec![2, 2, 1], Activation::Relu).unwrap();
        // W1 = [[1, -1], [0.5, 0.5]], b1 = [0, -1]; W2 = [2, 3], b2 = 0.25
        let p = [1.0, -1.0, 0.5, 0.5, 0.0, -1.0, 2.0, 3.0, 0.25];
        let y = s.forward(&p, &[3.0, 1.0]);
        // h = relu([2, 1]) = [2, 1]; y = 4 + 3 + 0.25
        assert_eq!(y, vec![7.25]);
    }

    #[test]
    fn zero_output_scale_gives_zero_network() {
        let s = MlpShape::new(vec![3, 8, 4], Activation::Tanh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = s.init_params(&mut rng, 0.0);
        assert!(s.forward(&p, &[0.3, -1.0, 2.0]).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn activation_tags_round_trip() {
        for a in [
            Activation::Identity,
            Activation::Tanh,
            Activation::Relu,
            Activation::Softplus,
            Activation::Sigmoid,
        ] {
            assert_eq!(a.tag().parse::<Activation>().unwrap(), a);
            assert_eq!(Activation::from_code(a.code()).unwrap(), a);
        }
        assert!("swish".parse::<Activation>().is_err());
    }
}
