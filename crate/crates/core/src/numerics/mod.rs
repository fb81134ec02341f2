//! Dense matrix kernels, Gram log-volumes, and automatic differentiation.

mod ad;
mod dual;
mod jet;
mod linalg;
mod matrix;
mod scalar;
mod tape;

pub use ad::{finite_difference_jacobian, grad, jacobian_forward, jacobian_reverse, jvp, vjp};
pub use dual::{seed, Dual};
pub use jet::{seed_identity, Jet};
pub use linalg::{
    gram_log_volume, gram_log_volume_scalar, householder_qr, least_squares, log_abs_det, solve,
    RANK_TOLERANCE,
};
pub use matrix::{DenseMatrix, StandardBasisVector};
pub use scalar::{constants, values, Scalar};
pub use tape::{Gradients, Tape, Var};

/// `½(1 + ln 2π)`, the entropy of a standard normal in nats.
pub const HALF_LOG_2PI_E: f64 = 1.418_938_533_204_672_7;

/// `½ ln 2π`.
pub const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_7;
