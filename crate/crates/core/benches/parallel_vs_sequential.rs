use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tandem_bounds::{
    bound, estimate_violation, ArrivalProcess, BoundFamily, ChannelModel, Parallelism, Scenario, SimConfig,
};

fn scenario() -> Scenario {
    Scenario::new(
        3,
        ChannelModel::rayleigh_db(5.0, 20.0).unwrap(),
        ArrivalProcess::train(25.0, 5).unwrap(),
    )
    .unwrap()
    .with_uniform_backlog(33.0)
    .unwrap()
}

fn simulate(c: &mut Criterion) {
    let sc = scenario();
    let w_grid: Vec<usize> = (0..=20).collect();
    let mut group = c.benchmark_group("estimate_violation");
    group.sample_size(10);
    for trials in [10_000u64, 100_000] {
        for (name, par) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Auto)] {
            let cfg = SimConfig::new(trials, 7).with_parallelism(par);
            group.bench_with_input(BenchmarkId::new(name, trials), &cfg, |b, cfg| {
                b.iter(|| estimate_violation(black_box(&sc), cfg, &w_grid).unwrap())
            });
        }
    }
    group.finish();
}

fn bound_sweep(c: &mut Criterion) {
    let sc = scenario();
    let ws: Vec<usize> = (0..=40).collect();
    let mut group = c.benchmark_group("wtb_sweep");
    for (name, par) in [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Auto)] {
        group.bench_function(name, |b| {
            b.iter(|| {
                tandem_bounds::par::map_ordered(par, &ws, |&w| {
                    bound(&sc.clone().with_target_delay(w), BoundFamily::Wtb)
                        .unwrap()
                        .probability
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, simulate, bound_sweep);
criterion_main!(benches);
