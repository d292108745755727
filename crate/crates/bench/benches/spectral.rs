use branchline_bench::random_signal;
use branchline_core::spectral::{forward_transform, inverse_transform};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn transforms(c: &mut Criterion) {
    let x = random_signal(1024, 7);
    let spectrum = forward_transform(&x);

    let mut group = c.benchmark_group("transforms_n1024");
    group.bench_function("forward", |b| b.iter(|| forward_transform(black_box(&x))));
    group.bench_function("inverse", |b| {
        b.iter(|| inverse_transform(black_box(&spectrum)))
    });
    group.bench_function("round_trip", |b| {
        b.iter(|| inverse_transform(&forward_transform(black_box(&x))))
    });
    group.finish();
}

criterion_group!(benches, transforms);
criterion_main!(benches);
