use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use quantised_eclipse::certificates::run_trials;
use quantised_eclipse::geometry::difference_set;
use quantised_eclipse::harness::{run_grid, scene_from_sigma, GridSpec};
use quantised_eclipse::{Execution, SolverConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn trials(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let (b1, b2) = scene_from_sigma(32, 4.0, 2.0, 2).unwrap();
    let d = difference_set(&b1, &b2).unwrap();
    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    for m in [4usize, 16] {
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, m), &m, |b, &m| {
                b.iter(|| black_box(run_trials(&d, m, 16, 1, &cfg, exec).unwrap()))
            });
        }
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let spec = GridSpec {
        n: 16,
        m_values: vec![2, 8],
        sigma_values: vec![1.0, 8.0],
        delta_values: vec![1.0, 4.0],
        trials: 8,
        ..GridSpec::desk()
    };
    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| black_box(run_grid(&spec, &cfg, exec).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, trials, grid);
criterion_main!(benches);
