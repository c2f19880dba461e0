use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sideinfo::{Channel, ConditionalDistribution, Distribution, Evaluator, Execution, Mode, Penalty};

fn binary_channel() -> Channel {
    let w =
        ConditionalDistribution::from_rows(vec![vec![0.85, 0.15], vec![0.1, 0.9], vec![0.6, 0.4], vec![0.35, 0.65]])
            .unwrap();
    Channel::new(Distribution::new(vec![0.3, 0.7]).unwrap(), w, 2).unwrap()
}

fn lattice_search(c: &mut Criterion) {
    let ch = binary_channel();
    let pen = Penalty {
        mode: Mode::Erasure,
        rate: 0.2,
        threshold: 0.1,
        alpha: 1.0,
    };
    let mut group = c.benchmark_group("lattice_search");
    group.sample_size(10);
    for (u_size, d) in [(2, 6), (3, 4)] {
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            let ev = Evaluator::new(&ch, u_size, d).unwrap().with_execution(exec);
            group.bench_with_input(BenchmarkId::new(name, format!("u{u_size}_d{d}")), &pen, |b, pen| {
                b.iter(|| ev.evaluate(pen).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, lattice_search);
criterion_main!(benches);
