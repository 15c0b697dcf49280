//! Parallel vs sequential: Bode sweep of the MSD chain and Loewner assembly.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use somor::bode::{frequency_response, log_grid};
use somor::loewner::{alternating_points, build_loewner, sample_siso};
use somor::par::Execution;
use somor::system::msd_benchmark;

fn bode_sweep(c: &mut Criterion) {
    let sys = msd_benchmark(100, 1.0, 0.1, 1.5).unwrap();
    let grid = log_grid(400, 1e-2, 1e2);
    let mut group = c.benchmark_group("bode_msd100_400pts");
    group.sample_size(10);
    for (name, exec) in [("auto", Execution::Auto), ("sequential", Execution::Sequential)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| frequency_response(&sys, &grid, 0, 0, exec).unwrap())
        });
    }
    group.finish();
}

fn loewner_assembly(c: &mut Criterion) {
    let sys = msd_benchmark(100, 1.0, 0.1, 1.5).unwrap();
    let mut group = c.benchmark_group("loewner_build");
    group.sample_size(10);
    for nu in [12usize, 200] {
        let (right, left) = alternating_points(nu, 1e-2, 1e2);
        let data = sample_siso(&sys, &right, &left, Execution::Auto).unwrap();
        for (name, exec) in [("auto", Execution::Auto), ("sequential", Execution::Sequential)] {
            group.bench_with_input(BenchmarkId::new(name, nu), &exec, |b, &exec| {
                b.iter(|| build_loewner(&data, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bode_sweep, loewner_assembly);
criterion_main!(benches);
