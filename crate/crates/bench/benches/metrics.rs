use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use manimet_bench::{test_matrix, torus, torus_batch};
use manimet_core::decoders::{jacobian_batch, JacobianMode, Partition};
use manimet_core::metrics::{
    manifold_entropies_batch, manifold_total_correlation_batch, mpmi_matrix_batch, prior_latents,
};
use manimet_core::numerics::gram_log_volume;

fn gram(c: &mut Criterion) {
    let mut g = c.benchmark_group("gram_log_volume");
    for k in [1, 2, 10, 20] {
        let m = test_matrix(20, k);
        g.bench_with_input(BenchmarkId::from_parameter(k), &m, |b, m| {
            b.iter(|| gram_log_volume(black_box(m)))
        });
    }
    g.finish();
}

fn jacobians(c: &mut Criterion) {
    let dec = torus();
    let z = prior_latents(20, 200, 0);
    let mut g = c.benchmark_group("torus_jacobian_batch_200");
    for mode in [
        JacobianMode::Analytic,
        JacobianMode::Forward,
        JacobianMode::Reverse,
    ] {
        g.bench_function(mode.as_str(), |b| {
            b.iter(|| jacobian_batch(&dec, black_box(&z), mode).unwrap())
        });
    }
    g.finish();
}

fn estimators(c: &mut Criterion) {
    let batch = torus_batch(1000);
    let p = Partition::singletons(20);
    c.bench_function("torus_entropies_1000", |b| {
        b.iter(|| manifold_entropies_batch(black_box(&batch)).unwrap())
    });
    c.bench_function("torus_mtc_1000", |b| {
        b.iter(|| manifold_total_correlation_batch(black_box(&batch), &p).unwrap())
    });
    let small = torus_batch(200);
    c.bench_function("torus_mpmi_200", |b| {
        b.iter(|| mpmi_matrix_batch(black_box(&small)).unwrap())
    });
}

criterion_group!(benches, gram, jacobians, estimators);
criterion_main!(benches);
