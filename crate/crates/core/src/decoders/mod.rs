//! Decoders `z -> x` consumed by the metrics, and Jacobian extraction.

mod adapters;
mod affine;
mod decoder;
mod flow;
mod index;
mod jacobian;
mod mlp;
mod torus;

pub use adapters::{PermutedDecoder, RotatedDecoder};
pub use affine::{pca_fit, AffineDecoder, PcaFit};
pub use decoder::{decode_checked, Decoder};
pub use flow::FlowDecoder;
pub use index::{IndexSet, Partition};
pub use jacobian::{
    jacobian, jacobian_batch, jacobian_columns, JacobianBatch, JacobianMode, FD_STEP,
};
pub use mlp::{load_mlp_decoder, MlpDecoder, MLP_FORMAT_VERSION, MLP_MAGIC};
pub use torus::TorusDecoder;

#[cfg(test)]
mod tests;
