//! Fully connected decoder loaded from a small binary file.
//!
//! ```text
//! magic       8 bytes "MMMLPDEC"
//! version     u32     = 1
//! activation  u32 length + ASCII tag ("tanh", "relu", ...)
//! widths      u32 count + u32 each (input first, output last)
//! per layer   f64 weights (row-major out × in), then f64 biases (out)
//! ```
//!
//! All integers and floats are little-endian. The last layer is linear.

use std::path::Path;

use rand::Rng;

use super::decoder::{scalar_decode_methods, Decoder};
use crate::binio::{Reader, Writer};
use crate::error::{check_dim, Error, Result};
use crate::flows::{Activation, MlpShape};
use crate::numerics::{constants, Scalar};

pub const MLP_MAGIC: &[u8; 8] = b"MMMLPDEC";
pub const MLP_FORMAT_VERSION: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpDecoder {
    name: String,
    shape: MlpShape,
    params: Vec<f64>,
}

impl MlpDecoder {
    pub fn new(shape: MlpShape, params: Vec<f64>) -> Result<Self> {
        check_dim("MLP decoder parameters", shape.param_count(), params.len())?;
        if shape.output_dim() < shape.input_dim() {
            return Err(Error::InvalidArgument(format!(
                "decoder output width {} is below latent width {}",
                shape.output_dim(),
                shape.input_dim()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("MLP decoder parameters".into()));
        }
        Ok(Self {
            name: "mlp".into(),
            shape,
            params,
        })
    }

    /// Random network with LeCun-normal weights and small random biases.
    pub fn random<R: Rng>(shape: MlpShape, rng: &mut R) -> Result<Self> {
        let mut params = shape.init_params(rng, 1.0);
        for (_, br) in shape.layer_ranges() {
            for p in &mut params[br] {
                *p = rng.gen_range(-0.5..0.5);
            }
        }
        Self::new(shape, params)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    fn eval<T: Scalar>(&self, z: &[T]) -> Result<Vec<T>> {
        check_dim("MLP decoder input", self.shape.input_dim(), z.len())?;
        let params: Vec<T> = constants(&self.params);
        Ok(self.shape.forward(&params, z))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.bytes(MLP_MAGIC);
        w.u32(MLP_FORMAT_VERSION);
        let tag = self.shape.activation.tag().as_bytes();
        w.u32(tag.len());
        w.bytes(tag);
        w.u32s(&self.shape.widths);
        w.f64s(&self.params);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.bytes(8)? != MLP_MAGIC {
            return Err(Error::Format(
                "bad magic bytes: not an MLP decoder file".into(),
            ));
        }
        let version = r.u32()?;
        if version != MLP_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported MLP decoder version {version} (expected {MLP_FORMAT_VERSION})"
            )));
        }
        let tag_len = r.u32()?;
        if tag_len > 64 {
            return Err(Error::Format(format!("activation tag of length {tag_len}")));
        }
        let tag = std::str::from_utf8(r.bytes(tag_len)?)
            .map_err(|_| Error::Format("activation tag is not UTF-8".into()))?;
        let activation: Activation = tag.parse()?;
        let widths = r.u32s(1024)?;
        let shape = MlpShape::new(widths, activation).map_err(|e| Error::Format(e.to_string()))?;
        let params = r.f64s(shape.param_count())?;
        r.finish()?;
        Self::new(shape, params).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

pub fn load_mlp_decoder(path: impl AsRef<Path>) -> Result<MlpDecoder> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "mlp".into());
    Ok(MlpDecoder::from_bytes(&std::fs::read(path)?)?.with_name(name))
}

impl Decoder for MlpDecoder {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn latent_dim(&self) -> usize {
        self.shape.input_dim()
    }

    fn data_dim(&self) -> usize {
        self.shape.output_dim()
    }

    scalar_decode_methods!();
}
