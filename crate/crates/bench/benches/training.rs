use criterion::{black_box, criterion_group, criterion_main, Criterion};
use manimet_bench::{moons_model, torus_model};
use manimet_core::decoders::{IndexSet, Partition};
use manimet_core::training::{batch_gradient, Objective};

fn moons(c: &mut Criterion) {
    let (data, model) = moons_model(64, 16);
    let objectives = [
        ("ml", Objective::Ml),
        (
            "ml_mtc",
            Objective::MlMtc {
                lambda: 1.0,
                partition: Partition::singletons(2),
            },
        ),
        (
            "ml_rec",
            Objective::MlRec {
                lambda: 5.0,
                core: IndexSet::parse("1", 2).unwrap(),
            },
        ),
    ];
    let mut g = c.benchmark_group("two_moons_gradient_64");
    for (name, obj) in &objectives {
        g.bench_function(*name, |b| {
            b.iter(|| batch_gradient(&model, black_box(&data), obj).unwrap())
        });
    }
    g.finish();
}

fn torus(c: &mut Criterion) {
    let (data, model) = torus_model(16, 16, 8);
    let mtc = Objective::MlMtc {
        lambda: 1.0,
        partition: Partition::singletons(20),
    };
    let mut g = c.benchmark_group("torus_gradient_16");
    g.sample_size(10);
    g.bench_function("ml", |b| {
        b.iter(|| batch_gradient(&model, black_box(&data), &Objective::Ml).unwrap())
    });
    g.bench_function("ml_mtc", |b| {
        b.iter(|| batch_gradient(&model, black_box(&data), &mtc).unwrap())
    });
    g.finish();
}

criterion_group!(benches, moons, torus);
criterion_main!(benches);
