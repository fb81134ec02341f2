use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Dual, Var};

/// A deterministic map from latents to data, evaluable on plain floats,
/// forward-mode duals and reverse-mode tape variables.
///
/// Implementors usually write one generic `eval<T: Scalar>` and forward the
/// three entry points to it with [`scalar_decode_methods!`].
pub trait Decoder: Send + Sync {
    fn name(&self) -> String;
    fn latent_dim(&self) -> usize;
    fn data_dim(&self) -> usize;

    fn decode(&self, z: &[f64]) -> Result<Vec<f64>>;
    fn decode_dual(&self, z: &[Dual<f64>]) -> Result<Vec<Dual<f64>>>;
    fn decode_var<'t>(&self, z: &[Var<'t>]) -> Result<Vec<Var<'t>>>;

    /// Closed-form Jacobian, when the decoder has one.
    fn analytic_jacobian(&self, _z: &[f64]) -> Option<Result<DenseMatrix>> {
        None
    }

    fn has_analytic_jacobian(&self) -> bool {
        false
    }

    fn has_encoder(&self) -> bool {
        false
    }

    /// Inverse map `x -> z`; only available when [`Decoder::has_encoder`].
    fn encode(&self, _x: &[f64]) -> Result<Vec<f64>> {
        Err(Error::Capability(format!(
            "decoder '{}' has no encoder",
            self.name()
        )))
    }
}

macro_rules! scalar_decode_methods {
    () => {
        fn decode(&self, z: &[f64]) -> $crate::error::Result<Vec<f64>> {
            self.eval(z)
        }
        fn decode_dual(
            &self,
            z: &[$crate::numerics::Dual<f64>],
        ) -> $crate::error::Result<Vec<$crate::numerics::Dual<f64>>> {
            self.eval(z)
        }
        fn decode_var<'t>(
            &self,
            z: &[$crate::numerics::Var<'t>],
        ) -> $crate::error::Result<Vec<$crate::numerics::Var<'t>>> {
            self.eval(z)
        }
    };
}
pub(crate) use scalar_decode_methods;

/// Applies `decoder.decode` and rejects non-finite output.
pub fn decode_checked(decoder: &dyn Decoder, z: &[f64]) -> Result<Vec<f64>> {
    crate::error::check_dim("decoder input", decoder.latent_dim(), z.len())?;
    let x = decoder.decode(z)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!(
            "output of decoder '{}'",
            decoder.name()
        )));
    }
    Ok(x)
}
