use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use dnesa_bench::{random_individuals, random_objectives, sample_assign};
use dnesa_core::metrics::FrontIndex;
use dnesa_core::netproto::{decode_frame, encode_frame};
use dnesa_core::{non_dominated_filter, run_sequential, Archive, EngineConfig, ProblemSpec};
use std::hint::black_box;

fn evaluate(c: &mut Criterion) {
    let mut group = c.benchmark_group("evaluate");
    for key in ["P1", "P2/3", "P3", "P4", "DTLZ1/3/7", "DTLZ2/3/12"] {
        let problem: ProblemSpec = key.parse().unwrap();
        let x = random_individuals(&problem, 1, 1).remove(0).genes;
        group.bench_function(key, |b| b.iter(|| problem.evaluate(black_box(&x)).unwrap()));
    }
    group.finish();
}

fn filter(c: &mut Criterion) {
    let mut group = c.benchmark_group("non_dominated_filter");
    for (n, m) in [(200, 2), (200, 3), (200, 5), (2000, 2)] {
        let points = random_objectives(n, m, 2);
        group.bench_function(format!("n{n}_m{m}"), |b| {
            b.iter(|| non_dominated_filter(black_box(&points)).unwrap())
        });
    }
    group.finish();
}

fn archive(c: &mut Criterion) {
    let problem = ProblemSpec::dtlz2(3, 12).unwrap();
    let stream = random_individuals(&problem, 2000, 3);
    c.bench_function("archive_insert_2000_cap500", |b| {
        b.iter_batched(
            || stream.clone(),
            |stream| {
                let mut a = Archive::new(Archive::DEFAULT_CAPACITY).unwrap();
                for ind in stream {
                    a.insert(ind);
                }
                a
            },
            BatchSize::LargeInput,
        )
    });
}

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_sequential");
    group.sample_size(10);
    for key in ["P3", "DTLZ2/3/12"] {
        let config = EngineConfig::new(key.parse().unwrap(), 50, 50, 4, 9);
        group.bench_function(key, |b| {
            b.iter(|| run_sequential(black_box(&config)).unwrap())
        });
    }
    group.finish();
}

fn convergence(c: &mut Criterion) {
    let problem = ProblemSpec::dtlz2(3, 12).unwrap();
    let front = problem.sample_pareto_front(50_000).unwrap();
    let index = FrontIndex::new(&front).unwrap();
    let solutions: Vec<_> = random_individuals(&problem, 500, 4)
        .into_iter()
        .map(|i| i.objectives)
        .collect();
    c.bench_function("convergence_500_vs_50k", |b| {
        b.iter(|| index.convergence(black_box(&solutions)).unwrap())
    });
}

fn frames(c: &mut Criterion) {
    let msg = sample_assign(50);
    let bytes = encode_frame(&msg).unwrap();
    c.bench_function("frame_encode_assign50", |b| {
        b.iter(|| encode_frame(black_box(&msg)).unwrap())
    });
    c.bench_function("frame_decode_assign50", |b| {
        b.iter(|| decode_frame(&mut black_box(&bytes[..])).unwrap())
    });
}

criterion_group!(
    benches,
    evaluate,
    filter,
    archive,
    engine,
    convergence,
    frames
);
criterion_main!(benches);
