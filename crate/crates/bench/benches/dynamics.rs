use criterion::{criterion_group, criterion_main, Criterion};
use pbn_control::dynamics::{async_step, attractors, build_stg, stationary_distribution, strong_basins};
use pbn_control::model::{example1, random_model};
use pbn_control::pasip::{step1_scan, PasipConfig};
use pbn_control::{rng_from_seed, NetworkState};
use std::hint::black_box;

fn stg(c: &mut Criterion) {
    let model = random_model(12, 3, 2, 42);
    c.bench_function("build_stg_12", |b| b.iter(|| build_stg(black_box(&model)).unwrap()));
    let graph = build_stg(&model).unwrap();
    c.bench_function("attractors_12", |b| b.iter(|| attractors(black_box(&graph))));
    let attrs = attractors(&graph);
    c.bench_function("strong_basins_12", |b| b.iter(|| strong_basins(black_box(&graph), &attrs)));
}

fn simulation(c: &mut Criterion) {
    let model = random_model(20, 3, 2, 7);
    c.bench_function("async_step_x10k_20", |b| {
        let mut rng = rng_from_seed(1);
        b.iter(|| {
            let mut s = NetworkState::zeros(20);
            for _ in 0..10_000 {
                s = async_step(&model, s, &mut rng);
            }
            s
        })
    });
    let ex = example1();
    let attrs = attractors(&build_stg(&ex).unwrap());
    c.bench_function("stationary_example1", |b| b.iter(|| stationary_distribution(&ex, black_box(&attrs[2])).unwrap()));
    let config = PasipConfig { initial_states: Some(8), ..PasipConfig::default() };
    c.bench_function("pasip_step1_8runs_20", |b| b.iter(|| step1_scan(&model, &config, &mut rng_from_seed(3))));
}

criterion_group!(benches, stg, simulation);
criterion_main!(benches);
