use ndarray::Array2;
use pbn_control::agent::{
    bellman_target, branch_mse, checkpoint, epb_on_discovery, greedy_action, select_action, train, train_step,
    write_training_log, Adam, Agent, AgentConfig, EpsilonSchedule, NetworkShape, QNetwork, TrainConfig, Trainer, Transition,
};
use pbn_control::env::{Intervention, Landmarks, Observation};
use pbn_control::model::example1;
use pbn_control::pasip::{DiscoverySource, PaRegistry, PasipConfig};
use pbn_control::{rng_from_seed, NetworkState};
use proptest::prelude::*;
use rand::Rng;

fn toy_shape() -> NetworkShape {
    NetworkShape { inputs: 8, branches: 4, trunk: vec![8, 8], stream: 8 }
}

fn random_batch(rng: &mut impl Rng, rows: usize, shape: &NetworkShape) -> (Array2<f64>, Vec<Vec<bool>>, Vec<f64>) {
    let x = Array2::from_shape_fn((rows, shape.inputs), |_| rng.random_range(0..2) as f64);
    let actions = (0..rows).map(|_| (0..shape.branches).map(|_| rng.random_bool(0.5)).collect()).collect();
    let targets = (0..rows).map(|_| rng.random_range(-2.0..2.0)).collect();
    (x, actions, targets)
}

fn loss(net: &QNetwork<f64>, x: &Array2<f64>, actions: &[Vec<bool>], targets: &[f64]) -> f64 {
    branch_mse(&net.forward(x.view()).q, actions, targets).0
}

/// Largest relative error between analytic and central-difference gradients.
fn max_relative_error(seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let shape = toy_shape();
    let net: QNetwork<f64> = QNetwork::new(shape.clone(), &mut rng);
    let (x, actions, targets) = random_batch(&mut rng, 6, &shape);
    let (_, grad) = net.loss_and_gradient(x.view(), &actions, &targets);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let layer_count = net.layers().len();
    for layer in 0..layer_count {
        let size = net.layers()[layer].weight.len() + net.layers()[layer].bias.len();
        for idx in 0..size {
            let perturbed = |delta: f64| {
                let mut p = net.clone();
                let l = &mut p.layers_mut()[layer];
                let nw = l.weight.len();
                if idx < nw {
                    l.weight.as_slice_mut().unwrap()[idx] += delta;
                } else {
                    l.bias[idx - nw] += delta;
                }
                loss(&p, &x, &actions, &targets)
            };
            let numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            let g = grad.layers()[layer];
            let nw = g.weight.len();
            let analytic = if idx < nw { g.weight.as_slice().unwrap()[idx] } else { g.bias[idx - nw] };
            let scale = analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / scale);
        }
    }
    worst
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..10 {
        let err = max_relative_error(seed);
        assert!(err <= 1e-4, "draw {seed}: relative error {err:e}");
    }
}

#[test]
fn zero_error_batch_leaves_parameters() {
    let mut rng = rng_from_seed(4);
    // A single branch, so every row's target can equal its chosen Q-value.
    let shape = NetworkShape { branches: 1, ..toy_shape() };
    let mut net: QNetwork<f64> = QNetwork::new(shape.clone(), &mut rng);
    let (x, actions, _) = random_batch(&mut rng, 5, &shape);
    let q = net.forward(x.view()).q;
    let targets: Vec<f64> = (0..5).map(|b| q[[b, 0, actions[b][0] as usize]]).collect();
    let (l, grad) = net.loss_and_gradient(x.view(), &actions, &targets);
    assert_eq!(l, 0.0);
    assert!(grad.layers().iter().all(|g| g.weight.iter().chain(g.bias.iter()).all(|&v| v == 0.0)));
    let before = net.clone();
    let mut adam = Adam::new(&net, 1e-3);
    adam.update(&mut net, &grad);
    assert_eq!(net, before);
}

fn fixed_batch(seed: u64) -> Vec<Transition> {
    let mut rng = rng_from_seed(seed);
    (0..32)
        .map(|_| {
            let cur = NetworkState::from_index(4, rng.random_range(0..16));
            let tgt = NetworkState::from_index(4, rng.random_range(0..16));
            Transition {
                observation: Observation { current: cur, target: tgt },
                action: Intervention::new((0..4).filter(|_| rng.random_bool(0.3)).take(3).collect(), 4, 3).unwrap(),
                reward: rng.random_range(-3.0..3.0),
                next_observation: Observation { current: tgt, target: tgt },
                done: true,
            }
        })
        .collect()
}

#[test]
fn repeated_training_on_fixed_batch_decreases_loss() {
    let mut rng = rng_from_seed(8);
    let mut net: QNetwork<f64> = QNetwork::new(NetworkShape::for_genes(4), &mut rng);
    let target = net.clone();
    let mut adam = Adam::new(&net, 1e-4);
    let batch = fixed_batch(2);
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut losses = Vec::new();
    for _ in 0..100 {
        losses.push(train_step(&mut net, &target, &mut adam, &refs, 0.99));
    }
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-3) + 1e-9, "{} -> {}", w[0], w[1]);
    }
    assert!(losses[99] < losses[0] * 0.9, "{} -> {}", losses[0], losses[99]);
}

#[test]
fn dueling_identities() {
    let net: QNetwork<f64> = QNetwork::new(toy_shape(), &mut rng_from_seed(5));
    let (x, _, _) = random_batch(&mut rng_from_seed(6), 7, &toy_shape());
    let fp = net.forward(x.view());
    for b in 0..7 {
        for d in 0..4 {
            let (q0, q1) = (fp.q[[b, d, 0]], fp.q[[b, d, 1]]);
            let (a0, a1) = (fp.advantages[[b, d, 0]], fp.advantages[[b, d, 1]]);
            assert!(((q0 - fp.value[b]) + (q1 - fp.value[b])).abs() < 1e-12);
            assert!(((q0.max(q1) - fp.value[b]) - (a0.max(a1) - (a0 + a1) / 2.0)).abs() < 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn greedy_ignores_per_branch_shifts(
        q in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..12),
        shift in -100.0f64..100.0,
        branch in 0usize..12,
    ) {
        let n = q.len();
        let base = Array2::from_shape_fn((n, 2), |(d, a)| if a == 0 { q[d].0 } else { q[d].1 });
        let mut shifted = base.clone();
        shifted.row_mut(branch % n).mapv_inplace(|v| v + shift);
        let a = greedy_action(base.view(), 3);
        let b = greedy_action(shifted.view(), 3);
        prop_assert!(a.len() <= 3);
        // Float rounding can move a margin across zero; skip those cases.
        let m = base[[branch % n, 1]] - base[[branch % n, 0]];
        let ms = shifted[[branch % n, 1]] - shifted[[branch % n, 0]];
        prop_assume!((m > 0.0) == (ms > 0.0) && (m - ms).abs() < 1e-9);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn selected_actions_respect_cap(seed in any::<u64>(), eps in 0.0f64..=1.0, max_flips in 0usize..5) {
        let mut rng = rng_from_seed(seed);
        let net: QNetwork<f32> = QNetwork::new(NetworkShape { inputs: 12, branches: 6, trunk: vec![8], stream: 4 }, &mut rng);
        let obs = Observation { current: NetworkState::from_index(6, seed % 64), target: NetworkState::zeros(6) };
        let a = select_action(&net, &obs, eps, &mut rng, max_flips);
        prop_assert!(a.len() <= max_flips);
        prop_assert!(a.genes().iter().all(|&g| g < 6));
    }

    #[test]
    fn epsilon_schedule_bounds(boosts in prop::collection::vec(0usize..6000, 0..5)) {
        let mut e = EpsilonSchedule::new(1.0, 0.05, 3000);
        for t in 0..6000 {
            if boosts.contains(&t) {
                let before = e.value();
                e.boost(0.3);
                prop_assert_eq!(e.value(), epb_on_discovery(before, 0.3));
            }
            let before = e.value();
            e.advance();
            prop_assert!(e.value() >= 0.05 && e.value() <= 1.0);
            let drop = before - e.value();
            prop_assert!(drop >= -1e-15 && drop <= e.slope() + 1e-15);
        }
    }
}

#[test]
fn epsilon_boost_resumes_original_slope() {
    let mut e = EpsilonSchedule::new(1.0, 0.05, 3000);
    let mut trace = Vec::new();
    for t in 0..8000 {
        if t == 5000 {
            e.boost(0.3);
        }
        trace.push(e.value());
        e.advance();
    }
    assert_eq!(trace[4999], 0.05);
    assert_eq!(trace[5000], 0.3);
    let slope = 0.95 / 3000.0;
    for t in 5001..5700 {
        assert!((trace[t - 1] - trace[t] - slope).abs() < 1e-12);
    }
    assert_eq!(trace[7999], 0.05);
    // Boost while above the floor is a no-op.
    let mut high = EpsilonSchedule::new(1.0, 0.05, 3000);
    high.boost(0.3);
    assert_eq!(high.value(), 1.0);
}

#[test]
fn bellman_targets() {
    let next = ndarray::array![[4.0f32, 12.0], [8.0, 1.0]];
    assert_eq!(bellman_target(998.0, true, next.view(), 0.99), 998.0);
    assert!((bellman_target(-1.0, false, next.view(), 0.99) - 8.9).abs() < 1e-9);
}

#[test]
fn checkpoint_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agent.ckpt");
    let net: QNetwork<f32> = QNetwork::new(NetworkShape::for_genes(4), &mut rng_from_seed(1));
    checkpoint::save(&net, &path).unwrap();
    let back = checkpoint::load(&path).unwrap();
    assert_eq!(back, net);
    assert_eq!(checkpoint::encode(&back), std::fs::read(&path).unwrap());
}

fn example_setup() -> (pbn_control::PbnModel, Landmarks, PaRegistry) {
    let model = example1();
    let (landmarks, registry) =
        Landmarks::prepare(&model, &PasipConfig::default(), 20, &mut rng_from_seed(0)).unwrap();
    (model, landmarks, registry)
}

fn short_config(steps: u64) -> TrainConfig {
    TrainConfig {
        steps,
        agent: AgentConfig { warmup: 64, batch_size: 16, target_sync: 50, ..AgentConfig::default() },
        shape: Some(NetworkShape { inputs: 8, branches: 4, trunk: vec![16, 16], stream: 8 }),
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_deterministic() {
    let (model, landmarks, registry) = example_setup();
    let run = || {
        let out = train(&model, registry.clone(), landmarks.clone(), short_config(600), &mut rng_from_seed(3)).unwrap();
        (write_training_log(&out.log), checkpoint::encode(&out.agent.online))
    };
    let (log_a, net_a) = run();
    let (log_b, net_b) = run();
    assert_eq!(log_a, log_b);
    assert_eq!(net_a, net_b);
    assert!(log_a.starts_with("step,episode,epsilon,reward,episode_len,n_pa_states\n"));
    let records = pbn_control::agent::parse_training_log(&log_a).unwrap();
    assert_eq!(records.last().unwrap().step, 600);
    assert!(records.iter().all(|r| r.episode_len >= 1 && r.episode_len <= 20));
}

#[test]
fn target_network_changes_only_at_sync() {
    let config = AgentConfig { target_sync: 7, learning_rate: 1e-3, ..AgentConfig::default() };
    let mut agent = Agent::new(NetworkShape::for_genes(4), config, &mut rng_from_seed(2));
    let batch = fixed_batch(3);
    let refs: Vec<&Transition> = batch.iter().collect();
    let mut target = agent.target.clone();
    for step in 1..=30u64 {
        agent.learn(&refs).unwrap();
        assert_eq!(agent.gradient_steps(), step);
        if step % 7 == 0 {
            assert_eq!(agent.target, agent.online);
            assert_ne!(agent.target, target);
            target = agent.target.clone();
        } else {
            assert_eq!(agent.target, target);
            assert_ne!(agent.online, agent.target);
        }
    }
}

#[test]
fn single_pair_registry_uses_that_pair() {
    let model = example1();
    let states = [NetworkState::parse("0000").unwrap(), NetworkState::parse("0101").unwrap()];
    let registry = PaRegistry::from_states(states, DiscoverySource::Step1);
    let landmarks = Landmarks::exact(&[]);
    assert!(Trainer::new(&model, registry.clone(), landmarks, short_config(10), &mut rng_from_seed(0)).is_err());
    let landmarks = Landmarks::pseudo(&registry);
    let mut rng = rng_from_seed(1);
    for _ in 0..50 {
        let (s, t) = landmarks.sample_pair(&mut rng);
        assert!((s, t) == (0, 1) || (s, t) == (1, 0));
    }
}

#[test]
fn synthetic_discoveries_boost_logged_epsilon() {
    let (model, landmarks, registry) = example_setup();
    let mut rng = rng_from_seed(12);
    let config = TrainConfig {
        agent: AgentConfig { epsilon_decay_steps: 200, ..short_config(0).agent },
        ..short_config(3000)
    };
    let slope = 0.95 / 200.0;
    let mut trainer = Trainer::new(&model, registry, landmarks, config, &mut rng).unwrap();
    let schedule = [800u64, 1500, 1520];
    let mut boosted_at = Vec::new();
    while !trainer.finished() {
        if let Some(&s) = schedule.iter().find(|&&s| trainer.step() >= s && !boosted_at.iter().any(|&(b, _)| b == s)) {
            let before = trainer.epsilon();
            trainer.boost_exploration();
            assert_eq!(trainer.epsilon(), epb_on_discovery(before, 0.3));
            boosted_at.push((s, trainer.step()));
        }
        trainer.run_episode(&mut rng).unwrap();
    }
    let log = trainer.log();
    for &(_, step) in &boosted_at {
        // The episode right after a boost ends at most `len` slope-steps below 0.3.
        let rec = log.iter().find(|r| r.step > step).unwrap();
        let expected = (0.3 - slope * (rec.step - step) as f64).max(0.05);
        assert!((rec.epsilon - expected).abs() < 1e-6, "{} vs {expected}", rec.epsilon);
    }
    assert!((log.last().unwrap().epsilon - 0.05).abs() < 1e-12);
}
