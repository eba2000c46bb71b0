use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use onlinestl::harness::{run_benchmark, Interleave, SourceMode};
use onlinestl::{BenchmarkSpec, DEFAULT_GAMMA};

fn keyed_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("keyed");
    group.sample_size(10);
    for workers in [1, 2, 4] {
        let spec = BenchmarkSpec {
            keys: 64,
            points_per_key: 2_000,
            periods: vec![24],
            gamma: DEFAULT_GAMMA,
            workers,
            mode: SourceMode::PreGenerated,
            seed: 7,
            interleave: Interleave::RoundRobin,
            max_duration_secs: None,
            retain_outputs: false,
        };
        group.throughput(Throughput::Elements((spec.keys * spec.points_per_key) as u64));
        group.bench_with_input(BenchmarkId::new("workers", workers), &spec, |b, spec| {
            b.iter(|| run_benchmark(spec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, keyed_run);
criterion_main!(benches);
