use branchline_bench::{determined_instance, three_branch_fixture};
use branchline_core::{
    degenerate_approximation, extrapolate_from_segment, ExtrapolationOptions, SolverChoice,
    SolverOptions,
};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn construction(c: &mut Criterion) {
    let (process, plan) = three_branch_fixture(256);
    c.bench_function("degenerate_approximation_m3_n256", |b| {
        b.iter(|| degenerate_approximation(black_box(&process), black_box(&plan)).unwrap())
    });
}

fn solvers(c: &mut Criterion) {
    let (truth, plan, interval, data) = determined_instance(64);
    let direct = ExtrapolationOptions {
        solver_options: SolverOptions {
            lambda: Some(0.0),
            ..SolverOptions::default()
        },
        ..ExtrapolationOptions::default()
    };
    let projection = ExtrapolationOptions {
        solver: SolverChoice::Projection,
        ..ExtrapolationOptions::default()
    };

    let mut group = c.benchmark_group("segment_recovery_m3_n64");
    group.sample_size(20);
    group.bench_function("direct", |b| {
        b.iter(|| {
            extrapolate_from_segment(&truth, &plan, 1, &interval, black_box(&data), &direct)
                .unwrap()
        })
    });
    group.bench_function("projection", |b| {
        b.iter(|| {
            extrapolate_from_segment(&truth, &plan, 1, &interval, black_box(&data), &projection)
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, construction, solvers);
criterion_main!(benches);
