use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::flows::{Activation, FlowArchitecture, FlowModel, MlpShape};
use crate::numerics::{gram_log_volume, DenseMatrix};

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn random_flow(dim: usize, seed: u64) -> FlowModel {
    let arch = FlowArchitecture {
        dim,
        blocks: 3,
        hidden: vec![8],
        seed,
        ..Default::default()
    };
    let mut m = FlowModel::new(&arch).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p: Vec<f64> = normal_vec(&mut rng, m.param_count())
        .iter()
        .map(|v| 0.3 * v)
        .collect();
    m.set_params(p).unwrap();
    m
}

fn assert_modes_agree(decoder: &dyn Decoder, z: &[f64]) {
    let fwd = jacobian(decoder, z, JacobianMode::Forward).unwrap();
    let rev = jacobian(decoder, z, JacobianMode::Reverse).unwrap();
    let fd = jacobian(decoder, z, JacobianMode::FiniteDifference).unwrap();
    assert!(
        fwd.max_abs_diff(&rev) < 1e-10,
        "forward vs reverse {}",
        fwd.max_abs_diff(&rev)
    );
    assert!(
        fwd.max_abs_diff(&fd) < 1e-5,
        "forward vs fd {}",
        fwd.max_abs_diff(&fd)
    );
    if decoder.has_analytic_jacobian() {
        let a = jacobian(decoder, z, JacobianMode::Analytic).unwrap();
        assert!(a.max_abs_diff(&fwd) < 1e-10);
    }
}

#[test]
fn cross_mode_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let torus = TorusDecoder::new(vec![0.5, 0.3, 0.2], vec![0.05, 0.04, 0.03]).unwrap();
    let mlp = MlpDecoder::random(
        MlpShape::new(vec![3, 10, 5], Activation::Tanh).unwrap(),
        &mut rng,
    )
    .unwrap();
    let flow = FlowDecoder::new(random_flow(3, 9));
    for _ in 0..5 {
        let z = normal_vec(&mut rng, 6);
        assert_modes_agree(&torus, &z);
        let z = normal_vec(&mut rng, 3);
        assert_modes_agree(&mlp, &z);
        assert_modes_agree(&flow, &z);
    }
}

#[test]
fn torus_columns_match_block_structure() {
    let sp = vec![0.4, 0.3];
    let sr = vec![0.05, 0.02];
    let t = TorusDecoder::new(sp.clone(), sr.clone()).unwrap();
    let z = [0.8, -1.2, 0.3, 0.5];
    let j = jacobian(&t, &z, JacobianMode::Forward).unwrap();
    for k in 0..2 {
        let phi = sp[k] * z[k];
        let r = 1.0 + sr[k] * z[2 + k];
        let col = j.column(k);
        for (row, v) in col.iter().enumerate() {
            let expected = if row == 2 * k {
                -sp[k] * r * phi.sin()
            } else if row == 2 * k + 1 {
                sp[k] * r * phi.cos()
            } else {
                0.0
            };
            assert!((v - expected).abs() < 1e-14);
        }
    }
}

#[test]
fn column_slices_are_exact() {
    let flow = FlowDecoder::new(random_flow(4, 2));
    let z = [0.3, -0.7, 1.1, 0.2];
    let set = IndexSet::parse("2,4", 4).unwrap();
    let full = jacobian(&flow, &z, JacobianMode::Forward).unwrap();
    let part = jacobian_columns(&flow, &z, &set, JacobianMode::Forward).unwrap();
    assert_eq!(part, full.select_columns(set.indices()));
}

#[test]
fn rotation_preserves_volumes() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inner: Arc<dyn Decoder> = Arc::new(
        MlpDecoder::random(
            MlpShape::new(vec![3, 6, 3], Activation::Tanh).unwrap(),
            &mut rng,
        )
        .unwrap(),
    );
    let c = (0.3f64).cos();
    let s = (0.3f64).sin();
    let q =
        DenseMatrix::from_rows(&[vec![c, -s, 0.0], vec![s, c, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
    let rotated = RotatedDecoder::new(inner.clone(), q).unwrap();
    let z = normal_vec(&mut rng, 3);
    let a = jacobian(inner.as_ref(), &z, JacobianMode::Forward).unwrap();
    let b = jacobian(&rotated, &z, JacobianMode::Forward).unwrap();
    for cols in [vec![0], vec![1, 2], vec![0, 1, 2]] {
        let va = gram_log_volume(&a.select_columns(&cols)).unwrap();
        let vb = gram_log_volume(&b.select_columns(&cols)).unwrap();
        assert!((va - vb).abs() < 1e-10);
    }
}

#[test]
fn permuted_decoder_moves_columns() {
    let inner: Arc<dyn Decoder> = Arc::new(AffineDecoder::diagonal(&[1.0, 2.0, 3.0]).unwrap());
    let p = PermutedDecoder::new(inner.clone(), vec![2, 0, 1]).unwrap();
    let z = [0.1, 0.2, 0.3];
    let jp = jacobian(&p, &z, JacobianMode::Forward).unwrap();
    let ji = inner.analytic_jacobian(&z).unwrap().unwrap();
    for j in 0..3 {
        assert_eq!(jp.column(j), ji.column(p.permutation()[j]));
    }
    assert_eq!(jacobian(&p, &z, JacobianMode::Analytic).unwrap(), jp);
    let x = p.decode(&z).unwrap();
    for (a, b) in p.encode(&x).unwrap().iter().zip(&z) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn degenerate_samples_are_flagged() {
    let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
    let d = AffineDecoder::new(a, vec![0.0, 0.0]).unwrap();
    let batch = jacobian_batch(
        &d,
        &[vec![0.0, 0.0], vec![1.0, 1.0]],
        JacobianMode::Analytic,
    )
    .unwrap();
    assert_eq!(batch.degenerate_count(), 2);
    let ok = jacobian_batch(
        &AffineDecoder::identity(2),
        &[vec![0.0, 0.0]],
        JacobianMode::Reverse,
    )
    .unwrap();
    assert_eq!(ok.degenerate_count(), 0);
    assert_eq!(ok.matrix(0), &DenseMatrix::identity(2));
}

#[test]
fn flow_decoder_delegates() {
    let model = random_flow(2, 3);
    let d = FlowDecoder::new(model.clone());
    let z = [0.4, -0.9];
    assert_eq!(d.decode(&z).unwrap(), model.decode(&z).unwrap());
    let x = d.decode(&z).unwrap();
    let back = d.encode(&x).unwrap();
    assert!((back[0] - z[0]).abs() < 1e-9 && (back[1] - z[1]).abs() < 1e-9);
}
