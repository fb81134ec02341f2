use super::decoder::{scalar_decode_methods, Decoder};
use crate::error::Result;
use crate::flows::FlowModel;
use crate::numerics::Scalar;

/// Decoder backed by the inverse pass of a [`FlowModel`].
#[derive(Debug, Clone)]
pub struct FlowDecoder {
    name: String,
    model: FlowModel,
}

impl FlowDecoder {
    pub fn new(model: FlowModel) -> Self {
        Self {
            name: "flow".into(),
            model,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn model(&self) -> &FlowModel {
        &self.model
    }

    fn eval<T: Scalar>(&self, z: &[T]) -> Result<Vec<T>> {
        let params = self.model.params_as::<T>();
        Ok(self.model.decode_with(&params, z)?.0)
    }
}

impl Decoder for FlowDecoder {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn latent_dim(&self) -> usize {
        self.model.dim()
    }

    fn data_dim(&self) -> usize {
        self.model.dim()
    }

    scalar_decode_methods!();

    fn has_encoder(&self) -> bool {
        true
    }

    fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.model.encode(x)?.0)
    }
}
