use thiserror::Error;

/// Errors raised anywhere in the metric, flow, and training pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("degenerate Jacobian: {columns}-column block is rank deficient at column {index}")]
    DegenerateJacobian { columns: usize, index: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("capability not available: {0}")]
    Capability(String),

    #[error("invalid index set: {0}")]
    IndexSet(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error("training diverged at epoch {epoch}: nll {nll} vs initial {initial}")]
    Divergence {
        epoch: usize,
        nll: f64,
        initial: f64,
    },

    #[error("training error: {0}")]
    Training(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension {
            context,
            expected,
            actual,
        });
    }
    Ok(())
}
