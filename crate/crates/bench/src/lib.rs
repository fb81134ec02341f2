//! Fixtures shared by the benchmarks.

use manimet_core::decoders::{JacobianBatch, JacobianMode, TorusDecoder};
use manimet_core::dgp::{DatasetConfig, TorusDatasetConfig, TwoMoonsConfig};
use manimet_core::flows::{FlowArchitecture, FlowModel};
use manimet_core::metrics::prior_batch;
use manimet_core::numerics::DenseMatrix;
use manimet_core::training::{fit_standardization, FlowSpec};

/// Default 10-circle torus with frozen rotation and normalization.
pub fn torus() -> TorusDecoder {
    TorusDatasetConfig::default()
        .decoder()
        .expect("default torus")
}

/// Analytic-Jacobian batch of the default torus.
pub fn torus_batch(samples: usize) -> JacobianBatch {
    prior_batch(&torus(), samples, 0, Some(JacobianMode::Analytic)).expect("torus batch")
}

/// Deterministic well-conditioned `rows × cols` matrix.
pub fn test_matrix(rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |i, j| {
        let t = (i * cols + j) as f64;
        (0.37 * t).sin() + if i == j { 2.0 } else { 0.0 }
    })
}

/// Two-moons rows and an untrained standardized flow with the given width.
pub fn moons_model(samples: usize, hidden: usize) -> (Vec<Vec<f64>>, FlowModel) {
    let data = DatasetConfig::TwoMoons(TwoMoonsConfig {
        samples,
        ..Default::default()
    })
    .generate()
    .expect("two moons");
    let spec = FlowSpec {
        hidden: vec![hidden; 2],
        ..Default::default()
    };
    let arch: FlowArchitecture = spec.architecture(2, 0);
    let model = FlowModel::new(&arch)
        .and_then(|m| m.with_standardization(fit_standardization(&data)?))
        .expect("flow");
    (data, model)
}

/// Torus rows and an untrained 20-dimensional flow.
pub fn torus_model(samples: usize, hidden: usize, blocks: usize) -> (Vec<Vec<f64>>, FlowModel) {
    let data = DatasetConfig::Torus(TorusDatasetConfig {
        samples,
        ..Default::default()
    })
    .generate()
    .expect("torus data");
    let spec = FlowSpec {
        hidden: vec![hidden; 2],
        blocks,
        ..Default::default()
    };
    let model = FlowModel::new(&spec.architecture(20, 0))
        .and_then(|m| m.with_standardization(fit_standardization(&data)?))
        .expect("flow");
    (data, model)
}
