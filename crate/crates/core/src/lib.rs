#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

mod binio;
pub mod decoders;
pub mod dgp;
pub mod error;
pub mod flows;
pub mod metrics;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
