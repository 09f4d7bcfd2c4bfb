use criterion::{criterion_group, criterion_main, Criterion};
use ndarray::Array2;
use pbn_control::agent::{train_step, Adam, NetworkShape, QNetwork, Transition};
use pbn_control::env::{Intervention, Observation};
use pbn_control::{rng_from_seed, NetworkState};
use rand::Rng;
use std::hint::black_box;

fn batch(genes: usize, size: usize) -> Vec<Transition> {
    let mut rng = rng_from_seed(5);
    let mut state = || NetworkState::from_index(genes, rng.random_range(0..1u64 << genes));
    (0..size)
        .map(|i| {
            let (a, b) = (state(), state());
            Transition {
                observation: Observation { current: a, target: b },
                action: Intervention::new(vec![i % genes], genes, 3).unwrap(),
                reward: -1.0,
                next_observation: Observation { current: b, target: b },
                done: i % 4 == 0,
            }
        })
        .collect()
}

fn network(c: &mut Criterion) {
    for genes in [4usize, 10] {
        let net: QNetwork<f32> = QNetwork::new(NetworkShape::for_genes(genes), &mut rng_from_seed(1));
        let x = Array2::<f32>::from_elem((128, 2 * genes), 1.0);
        c.bench_function(&format!("forward_b128_n{genes}"), |b| b.iter(|| net.forward(black_box(x.view()))));

        let transitions = batch(genes, 128);
        let refs: Vec<&Transition> = transitions.iter().collect();
        let mut online = net.clone();
        let mut adam = Adam::new(&online, 1e-4);
        c.bench_function(&format!("train_step_b128_n{genes}"), |b| {
            b.iter(|| train_step(&mut online, &net, &mut adam, black_box(&refs), 0.99))
        });
    }
}

criterion_group!(benches, network);
criterion_main!(benches);
