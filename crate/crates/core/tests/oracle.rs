use pbn_control::dynamics::{attractors, build_stg, Attractor};
use pbn_control::env::{ControlEnv, ControlProblem, EnvConfig};
use pbn_control::model::{example1, random_model};
use pbn_control::oracle::{brute_force_min_length, oracle_table, ControlGraph, ControlStrategy};
use pbn_control::pasip::{DiscoverySource, PaRegistry};
use pbn_control::{rng_from_seed, NetworkState, PbnModel};

fn s(bits: &str) -> NetworkState {
    NetworkState::parse(bits).unwrap()
}

fn exact_registry(attrs: &[Attractor]) -> PaRegistry {
    PaRegistry::from_states(attrs.iter().flat_map(|a| a.states.iter().copied()), DiscoverySource::Step1)
}

/// Replays a strategy in the environment: each intervention is applied at
/// its prescribed state, after checking the previous hop landed in the
/// expected attractor. Attractor states are recurrent, so restarting the
/// episode at the prescribed state stands in for waiting there.
fn execute(model: &PbnModel, attrs: &[Attractor], strategy: &ControlStrategy, target: usize, seed: u64) -> bool {
    let mut env = ControlEnv::new(model, exact_registry(attrs), EnvConfig { detect: false, ..EnvConfig::default() });
    let mut rng = rng_from_seed(seed);
    let target_states = attrs[target].states.clone();
    for step in &strategy.steps {
        let problem = ControlProblem::new(vec![step.at], target_states.clone()).unwrap();
        env.reset(problem, &mut rng).unwrap();
        let out = env.step(&step.flips, &mut rng).unwrap();
        if !attrs[step.to_attractor].contains(&out.observation.current) {
            return false;
        }
    }
    attrs[target].states.contains(&env.episode().current)
}

#[test]
fn example1_minimal_controls() {
    let model = example1();
    let stg = build_stg(&model).unwrap();
    let attrs = attractors(&stg);
    let graph = ControlGraph::new(&stg, &attrs, 3);
    let rows = oracle_table(&graph);
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.min_length == 1));

    let a3_to_a1 = graph.minimal_control(2, 0).unwrap();
    assert_eq!(a3_to_a1.steps[0].at, s("1000"));
    assert_eq!(a3_to_a1.serialize(), "0");

    let forced = graph.minimal_control_from_state(2, s("1010"), 0).unwrap();
    assert_eq!(forced.serialize(), "0+2");
    assert_eq!(forced.len(), 1);

    for r in &rows {
        let bf = brute_force_min_length(&stg, &attrs, r.source_id, r.target_id, 3, 4);
        assert_eq!(bf, Some(1));
    }
}

#[test]
fn single_flip_budget_lengthens_paths() {
    let model = example1();
    let stg = build_stg(&model).unwrap();
    let attrs = attractors(&stg);
    let graph = ControlGraph::new(&stg, &attrs, 1);
    for source in 0..attrs.len() {
        for target in 0..attrs.len() {
            let bfs = graph.minimal_control(source, target).map(|c| c.len());
            let bf = brute_force_min_length(&stg, &attrs, source, target, 1, attrs.len());
            assert_eq!(bfs, bf, "{source}->{target}");
        }
    }
}

#[test]
fn bfs_agrees_with_brute_force_on_random_models() {
    let mut checked_models = 0;
    let mut checked_pairs = 0;
    for seed in 0..40u64 {
        let n = 3 + (seed as usize % 8);
        let l = if seed % 2 == 0 { 1 } else { 2 };
        let max_flips = 1 + (seed as usize % 3);
        let model = random_model(n, 3.min(n), l, 500 + seed);
        let stg = build_stg(&model).unwrap();
        let attrs = attractors(&stg);
        let graph = ControlGraph::new(&stg, &attrs, max_flips);
        let k = attrs.len();
        let max_len = (k - 1).min(4);
        for source in 0..k {
            for target in 0..k {
                let bfs = graph.minimal_control(source, target);
                let bf = brute_force_min_length(&stg, &attrs, source, target, max_flips, max_len);
                match (&bfs, bf) {
                    (Some(c), Some(len)) => assert_eq!(c.len(), len, "seed {seed}: {source}->{target}"),
                    (Some(c), None) => assert!(c.len() > max_len, "seed {seed}: brute force missed {source}->{target}"),
                    (None, found) => assert_eq!(found, None, "seed {seed}: {source}->{target}"),
                }
                if let Some(c) = bfs.filter(|c| !c.is_empty()) {
                    for repeat in 0..5 {
                        assert!(execute(&model, &attrs, &c, target, seed * 100 + repeat));
                    }
                    checked_pairs += 1;
                }
            }
        }
        checked_models += 1;
    }
    assert_eq!(checked_models, 40);
    assert!(checked_pairs > 0);
}

#[test]
fn strategies_succeed_when_replayed() {
    let model = example1();
    let stg = build_stg(&model).unwrap();
    let attrs = attractors(&stg);
    let graph = ControlGraph::new(&stg, &attrs, 3);
    for source in 0..3 {
        for target in 0..3 {
            if source == target {
                continue;
            }
            let strategy = graph.minimal_control(source, target).unwrap();
            for seed in 0..100 {
                assert!(execute(&model, &attrs, &strategy, target, seed));
            }
        }
    }
}

#[test]
fn unreachable_pair_reports_none() {
    // Both genes copy themselves: every state is a fixed point; with no flips
    // allowed nothing moves.
    let model = pbn_control::model::parse_model("genes: a,b\na: a\nb: b\n").unwrap();
    let stg = build_stg(&model).unwrap();
    let attrs = attractors(&stg);
    let graph = ControlGraph::new(&stg, &attrs, 0);
    assert_eq!(graph.minimal_control(0, 3), None);
    assert_eq!(brute_force_min_length(&stg, &attrs, 0, 3, 0, 3), None);
    let one = ControlGraph::new(&stg, &attrs, 1);
    assert_eq!(one.minimal_control(0, 3).unwrap().len(), 2);
    assert_eq!(ControlGraph::new(&stg, &attrs, 2).minimal_control(0, 3).unwrap().serialize(), "0+1");
}
