//! Invertible spline flows with analytic log-determinants.

mod checkpoint;
mod layers;
mod mlp;
mod model;
mod spline;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_model, save_model, FLOW_FORMAT_VERSION, FLOW_MAGIC,
};
pub use layers::{CouplingLayer, Layer, OrthogonalLayer, Permutation, Standardize};
pub use mlp::{Activation, MlpShape};
pub use model::{FlowArchitecture, FlowModel};
pub use spline::{
    raw_param_count, rqs_forward, rqs_inverse, RqsSpline, DEFAULT_BINS, DEFAULT_TAIL_BOUND,
    MIN_BIN_HEIGHT, MIN_BIN_WIDTH, MIN_DERIVATIVE,
};
