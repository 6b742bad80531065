use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use pinlab_core::mittag_leffler::mittag_leffler;
use pinlab_core::sampler::replica_rng;
use pinlab_core::stable::{sample_regenerative, StableLaw};
use pinlab_core::{Boundary, ContactSampler, KernelMode, PartitionTable, ReturnKernel, SlowlyVarying};

fn kernel(n_max: usize) -> ReturnKernel {
    ReturnKernel::build(0.5, SlowlyVarying::Constant { value: 1.0 }, KernelMode::Recurrent, n_max).unwrap()
}

fn partition(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition");
    group.sample_size(10);
    for n in [1_000usize, 10_000] {
        let k = kernel(n);
        group.bench_with_input(BenchmarkId::new("log_z", n), &n, |b, &n| {
            b.iter(|| PartitionTable::build(&k, black_box(0.01), n, Boundary::FreeWithInfinity).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("with_moments", n), &n, |b, &n| {
            b.iter(|| PartitionTable::with_moments(&k, black_box(0.01), n, Boundary::FreeWithInfinity).unwrap())
        });
    }
    group.finish();
}

fn sampler(c: &mut Criterion) {
    let n = 10_000;
    let k = kernel(n);
    let s = ContactSampler::new(&k, 0.0, n, Boundary::FreeWithInfinity).unwrap();
    let mut rng = replica_rng(1, 0);
    c.bench_function("sampler/draw_N1e4", |b| b.iter(|| s.sample(&mut rng).unwrap()));
}

fn stable(c: &mut Criterion) {
    let law = StableLaw::new(0.5).unwrap();
    let mut rng = replica_rng(2, 0);
    c.bench_function("stable/kanter_draw", |b| b.iter(|| law.sample(&mut rng)));
    c.bench_function("stable/regenerative_mesh1e-3", |b| {
        b.iter(|| sample_regenerative(&law, 1e-3, false, &[0.5], &mut rng).unwrap())
    });
    c.bench_function("stable/cdf", |b| b.iter(|| law.cdf(black_box(1.3))));
}

fn mittag_leffler_eval(c: &mut Criterion) {
    let mut group = c.benchmark_group("mittag_leffler");
    for x in [-20.0, -0.5, 3.0, 200.0] {
        group.bench_with_input(BenchmarkId::from_parameter(x), &x, |b, &x| {
            b.iter(|| mittag_leffler(0.5, black_box(x), 1))
        });
    }
    group.finish();
}

criterion_group!(benches, partition, sampler, stable, mittag_leffler_eval);
criterion_main!(benches);
