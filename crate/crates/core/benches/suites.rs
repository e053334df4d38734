use std::hint::black_box;

use certhom::suites::{self, Execution, StartKind};
use certhom::tracker::TrackerConfig;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const EXECUTIONS: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn property_suites(c: &mut Criterion) {
    let mut group = c.benchmark_group("comparison_200");
    for exec in EXECUTIONS {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| black_box(suites::comparison(200, 1, exec))),
        );
    }
    group.finish();

    let mut group = c.benchmark_group("alpha_100");
    for exec in EXECUTIONS {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| black_box(suites::alpha(100, 1, exec))),
        );
    }
    group.finish();
}

fn cubic_tracking(c: &mut Criterion) {
    let problems: Vec<_> = (0..2)
        .map(|i| suites::tracking_problem(&[3], StartKind::UnitRoots, 7, i).unwrap())
        .collect();
    let config = TrackerConfig::default();
    let mut group = c.benchmark_group("track_cubic_6_paths");
    group.sample_size(10);
    for exec in EXECUTIONS {
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &exec,
            |b, &exec| b.iter(|| black_box(suites::track_all(&problems, &config, exec))),
        );
    }
    group.finish();
}

criterion_group!(benches, property_suites, cubic_tracking);
criterion_main!(benches);
