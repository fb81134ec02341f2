//! Versioned binary checkpoint for [`FlowModel`].
//!
//! Layout (all integers `u32` little-endian unless noted):
//!
//! ```text
//! magic      8 bytes  "MMFLOW\0\0"
//! version    u32      = 1
//! dim        u32
//! layers     u32
//! params     u64      total parameter count
//! per layer: tag u8, then
//!   1 coupling:    bins, bound f64, activation u8, hidden [u32], condition [u32], transform [u32]
//!   2 orthogonal:  reflections
//!   3 permutation: perm [u32]
//!   4 standardize: shift f64 × dim, scale f64 × dim
//! parameters f64 × params, layer declaration order
//! ```
//!
//! `[u32]` is a `u32` length followed by that many entries.

use std::path::Path;

use super::layers::{CouplingLayer, Layer, OrthogonalLayer, Permutation, Standardize};
use super::mlp::{Activation, MlpShape};
use super::model::FlowModel;
use super::spline::raw_param_count;
use crate::binio::{Reader, Writer};
use crate::error::{Error, Result};

pub const FLOW_MAGIC: &[u8; 8] = b"MMFLOW\0\0";
pub const FLOW_FORMAT_VERSION: usize = 1;

const MAX_DIM: usize = 1 << 16;

pub fn encode_checkpoint(model: &FlowModel) -> Vec<u8> {
    let mut w = Writer::default();
    w.bytes(FLOW_MAGIC);
    w.u32(FLOW_FORMAT_VERSION);
    w.u32(model.dim());
    w.u32(model.layers().len());
    w.u64(model.param_count());
    for layer in model.layers() {
        match layer {
            Layer::Coupling(c) => {
                w.u8(1);
                w.u32(c.bins);
                w.f64(c.bound);
                w.u8(c.conditioner.activation.code());
                let widths = &c.conditioner.widths;
                w.u32s(&widths[1..widths.len() - 1]);
                w.u32s(&c.condition);
                w.u32s(&c.transform);
            }
            Layer::Orthogonal(o) => {
                w.u8(2);
                w.u32(o.reflections);
            }
            Layer::Permutation(p) => {
                w.u8(3);
                w.u32s(&p.perm);
            }
            Layer::Standardize(s) => {
                w.u8(4);
                w.f64s(&s.shift);
                w.f64s(&s.scale);
            }
        }
    }
    w.f64s(model.params());
    w.buf
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<FlowModel> {
    let mut r = Reader::new(bytes);
    let magic = r
        .bytes(8)
        .map_err(|_| Error::Format("not a flow checkpoint".into()))?;
    if magic != FLOW_MAGIC {
        return Err(Error::Format(
            "bad magic bytes: not a flow checkpoint".into(),
        ));
    }
    let version = r.u32()?;
    if version != FLOW_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version} (expected {FLOW_FORMAT_VERSION})"
        )));
    }
    let dim = r.u32()?;
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Format(format!("implausible dimension {dim}")));
    }
    let n_layers = r.u32()?;
    let n_params = r.u64()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let layer = match r.u8()? {
            1 => {
                let bins = r.u32()?;
                let bound = r.f64()?;
                let activation = Activation::from_code(r.u8()?)?;
                let hidden = r.u32s(1024)?;
                let condition = r.u32s(dim)?;
                let transform = r.u32s(dim)?;
                if bins == 0 {
                    return Err(Error::Format("coupling layer with zero bins".into()));
                }
                let mut widths = vec![condition.len()];
                widths.extend(hidden);
                widths.push(transform.len() * raw_param_count(bins));
                let conditioner =
                    MlpShape::new(widths, activation).map_err(|e| Error::Format(e.to_string()))?;
                Layer::Coupling(CouplingLayer {
                    condition,
                    transform,
                    conditioner,
                    bins,
                    bound,
                })
            }
            2 => Layer::Orthogonal(OrthogonalLayer {
                dim,
                reflections: r.u32()?,
            }),
            3 => Layer::Permutation(
                Permutation::new(r.u32s(dim)?).map_err(|e| Error::Format(e.to_string()))?,
            ),
            4 => {
                let shift = r.f64s(dim)?;
                let scale = r.f64s(dim)?;
                Layer::Standardize(
                    Standardize::new(shift, scale).map_err(|e| Error::Format(e.to_string()))?,
                )
            }
            tag => return Err(Error::Format(format!("unknown layer tag {tag}"))),
        };
        layers.push(layer);
    }
    let declared: usize = layers.iter().map(Layer::param_count).sum();
    if declared != n_params {
        return Err(Error::Format(format!(
            "layer descriptors imply {declared} parameters, header declares {n_params}"
        )));
    }
    let params = r.f64s(n_params)?;
    r.finish()?;
    FlowModel::from_parts(dim, layers, params).map_err(|e| match e {
        Error::Format(m) => Error::Format(m),
        other => Error::Format(other.to_string()),
    })
}

pub fn save_model(model: &FlowModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<FlowModel> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::FlowArchitecture;

    fn model() -> FlowModel {
        let arch = FlowArchitecture {
            dim: 3,
            blocks: 2,
            hidden: vec![5],
            seed: 11,
            ..Default::default()
        };
        let mut m = FlowModel::new(&arch).unwrap();
        let p: Vec<f64> = (0..m.param_count())
            .map(|i| (i as f64 * 0.37).sin())
            .collect();
        m.set_params(p).unwrap();
        m.with_standardization(Standardize::new(vec![0.1, 0.2, 0.3], vec![1.5, 2.0, 0.5]).unwrap())
            .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = model();
        let bytes = encode_checkpoint(&m);
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, m);
        let a: Vec<u64> = m.params().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u64> = back.params().iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
        assert_eq!(encode_checkpoint(&back), bytes);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = encode_checkpoint(&model());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_checkpoint(&bad), Err(Error::Format(_))));
        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        let err = decode_checkpoint(&wrong_version).unwrap_err();
        assert!(err.to_string().contains("version"));
        let err = decode_checkpoint(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(decode_checkpoint(&trailing).is_err());
        // dimension field inconsistent with layer descriptors
        let mut dim = bytes;
        dim[12] = 2;
        assert!(decode_checkpoint(&dim).is_err());
    }
}
