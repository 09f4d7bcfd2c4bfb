//! Pseudo-attractor state identification by simulation.
//!
//! Step I scans the network before training: from a pool of random initial
//! states it runs a burn-in, then counts state occupancy and registers every
//! state holding at least a threshold share of the counted steps. Step II runs
//! during training on the stream of visited states: a state repeated for
//! `stuck_steps` consecutive steps is registered (II-1), and every
//! `history_size` steps the window is checked for states revisited more than
//! a threshold share of the time, unless a known state appeared in it (II-2).

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;

use crate::dynamics::{async_step, StateSet};
use crate::model::PbnModel;
use crate::state::NetworkState;

#[derive(Clone, Debug, PartialEq)]
pub struct PasipConfig {
    /// Number of Step I runs; `None` means `min(2^n, 100)`.
    pub initial_states: Option<usize>,
    pub burn_in: usize,
    pub counted_steps: usize,
    pub step1_threshold: f64,
    pub stuck_steps: usize,
    pub history_size: usize,
    pub step2_threshold: f64,
}

impl Default for PasipConfig {
    fn default() -> Self {
        Self {
            initial_states: None,
            burn_in: 200,
            counted_steps: 1000,
            step1_threshold: 0.05,
            stuck_steps: 1000,
            history_size: 10_000,
            step2_threshold: 0.15,
        }
    }
}

impl PasipConfig {
    pub fn initial_state_count(&self, genes: usize) -> usize {
        self.initial_states.unwrap_or_else(|| if genes >= 7 { 100 } else { 1 << genes })
    }

    fn validate(&self) {
        assert!(self.step1_threshold > 0.0 && self.step1_threshold < 1.0);
        assert!(self.step2_threshold > 0.0 && self.step2_threshold < 1.0);
        assert!(self.counted_steps > 0 && self.stuck_steps > 0 && self.history_size > 0);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiscoverySource {
    Step1,
    Stuck,
    History,
}

impl fmt::Display for DiscoverySource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiscoverySource::Step1 => "step1",
            DiscoverySource::Stuck => "step2-1",
            DiscoverySource::History => "step2-2",
        })
    }
}

impl FromStr for DiscoverySource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "step1" => Ok(DiscoverySource::Step1),
            "step2-1" => Ok(DiscoverySource::Stuck),
            "step2-2" => Ok(DiscoverySource::History),
            other => Err(format!("unknown discovery source `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discovery {
    pub state: NetworkState,
    pub step: u64,
    pub source: DiscoverySource,
}

/// Append-only, duplicate-free list of discovered pseudo-attractor states.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PaRegistry {
    log: Vec<Discovery>,
    known: HashSet<NetworkState>,
}

impl PaRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry seeded with known states (e.g. exact attractor states).
    pub fn from_states(states: impl IntoIterator<Item = NetworkState>, source: DiscoverySource) -> Self {
        let mut registry = Self::new();
        for s in states {
            registry.register(s, 0, source);
        }
        registry
    }

    /// Returns `false` if the state was already known.
    pub fn register(&mut self, state: NetworkState, step: u64, source: DiscoverySource) -> bool {
        if !self.known.insert(state) {
            return false;
        }
        self.log.push(Discovery { state, step, source });
        true
    }

    pub fn contains(&self, state: &NetworkState) -> bool {
        self.known.contains(state)
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    /// States in discovery order.
    pub fn states(&self) -> impl Iterator<Item = NetworkState> + '_ {
        self.log.iter().map(|d| d.state)
    }

    pub fn discoveries(&self) -> &[Discovery] {
        &self.log
    }

    /// One `<bit-string> <source>` line per state.
    pub fn write_to(&self, mut out: impl Write) -> io::Result<()> {
        for d in &self.log {
            writeln!(out, "{} {}", d.state, d.source)?;
        }
        Ok(())
    }

    pub fn read_from(input: impl BufRead) -> io::Result<Self> {
        let invalid = |line: usize, msg: String| io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {msg}"));
        let mut registry = Self::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let bits = parts.next().unwrap_or_default();
            let state = NetworkState::parse(bits).ok_or_else(|| invalid(i + 1, format!("bad state `{bits}`")))?;
            let source = match parts.next() {
                Some(tag) => tag.parse().map_err(|e| invalid(i + 1, e))?,
                None => DiscoverySource::Step1,
            };
            registry.register(state, 0, source);
        }
        Ok(registry)
    }
}

/// Minimum occupancy count for a state to pass `threshold` of `steps`.
fn min_count(threshold: f64, steps: usize) -> usize {
    ((threshold * steps as f64) - 1e-9).ceil().max(1.0) as usize
}

/// One Step I run from `start`: returns the registered states, sorted.
pub fn step1_run<R: Rng + ?Sized>(model: &PbnModel, config: &PasipConfig, start: NetworkState, rng: &mut R) -> Vec<NetworkState> {
    let mut state = start;
    for _ in 0..config.burn_in {
        state = async_step(model, state, rng);
    }
    let mut counts: HashMap<NetworkState, usize> = HashMap::new();
    for _ in 0..config.counted_steps {
        state = async_step(model, state, rng);
        *counts.entry(state).or_default() += 1;
    }
    let needed = min_count(config.step1_threshold, config.counted_steps);
    let mut found: Vec<NetworkState> = counts.into_iter().filter(|&(_, c)| c >= needed).map(|(s, _)| s).collect();
    found.sort();
    found
}

/// Draws the Step I initial-state pool.
pub fn initial_pool<R: Rng + ?Sized>(genes: usize, count: usize, rng: &mut R) -> Vec<NetworkState> {
    if genes <= 20 {
        let space = 1usize << genes;
        sample(rng, space, count.min(space))
            .into_iter()
            .map(|i| NetworkState::from_index(genes, i as u64))
            .collect()
    } else {
        (0..count).map(|_| NetworkState::from_index(genes, rng.random())).collect()
    }
}

/// Step I scan. Runs are independent (each gets a seed drawn from `rng`) and
/// merged in pool order, so the result depends only on `rng`.
pub fn step1_scan<R: Rng + ?Sized>(model: &PbnModel, config: &PasipConfig, rng: &mut R) -> PaRegistry {
    config.validate();
    let pool = initial_pool(model.gene_count(), config.initial_state_count(model.gene_count()), rng);
    let seeds: Vec<u64> = pool.iter().map(|_| rng.random()).collect();
    let runs: Vec<Vec<NetworkState>> = pool
        .par_iter()
        .zip(seeds.par_iter())
        .map(|(&start, &seed)| {
            let mut run_rng = crate::Rng::seed_from_u64(seed);
            step1_run(model, config, start, &mut run_rng)
        })
        .collect();
    let mut registry = PaRegistry::new();
    for state in runs.into_iter().flatten() {
        registry.register(state, 0, DiscoverySource::Step1);
    }
    registry
}

/// Online Step II detectors, fed one visited state at a time.
#[derive(Clone, Debug)]
pub struct StepTwoDetector {
    stuck_steps: usize,
    history_size: usize,
    history_min_count: usize,
    last: Option<NetworkState>,
    run_length: usize,
    history: Vec<NetworkState>,
    saw_known: bool,
}

impl StepTwoDetector {
    pub fn new(config: &PasipConfig) -> Self {
        config.validate();
        // "More than" the threshold share: strictly above threshold * window.
        let history_min_count = (config.step2_threshold * config.history_size as f64 + 1e-9).floor() as usize + 1;
        Self {
            stuck_steps: config.stuck_steps,
            history_size: config.history_size,
            history_min_count,
            last: None,
            run_length: 0,
            history: Vec::with_capacity(config.history_size),
            saw_known: false,
        }
    }

    /// Processes one visited state, registering anything detected. Returns
    /// the newly registered states.
    pub fn feed(&mut self, state: NetworkState, registry: &mut PaRegistry, step: u64) -> Vec<NetworkState> {
        let mut found = Vec::new();

        if self.last == Some(state) {
            self.run_length += 1;
        } else {
            self.last = Some(state);
            self.run_length = 1;
        }
        if self.run_length >= self.stuck_steps {
            if registry.register(state, step, DiscoverySource::Stuck) {
                found.push(state);
            }
            self.run_length = 0;
        }

        if registry.contains(&state) {
            self.saw_known = true;
        }
        self.history.push(state);
        if self.history.len() >= self.history_size {
            if !self.saw_known {
                let mut counts: HashMap<NetworkState, usize> = HashMap::new();
                for s in &self.history {
                    *counts.entry(*s).or_default() += 1;
                }
                let mut frequent: Vec<NetworkState> =
                    counts.into_iter().filter(|&(_, c)| c >= self.history_min_count).map(|(s, _)| s).collect();
                frequent.sort();
                for s in frequent {
                    if registry.register(s, step, DiscoverySource::History) {
                        found.push(s);
                    }
                }
            }
            self.history.clear();
            self.saw_known = false;
        }
        found
    }

    /// Forgets the current run and history window.
    pub fn reset(&mut self) {
        self.last = None;
        self.run_length = 0;
        self.history.clear();
        self.saw_known = false;
    }
}

/// Share of registered states that are true attractor states; `None` for an
/// empty registry.
pub fn precision<'a>(registered: impl IntoIterator<Item = &'a NetworkState>, truth: &StateSet) -> Option<f64> {
    let (mut tp, mut total) = (0usize, 0usize);
    for s in registered {
        total += 1;
        if truth.contains(s) {
            tp += 1;
        }
    }
    (total > 0).then(|| tp as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::example1;

    fn s(bits: &str) -> NetworkState {
        NetworkState::parse(bits).unwrap()
    }

    #[test]
    fn fixed_point_run_registers_itself() {
        let model = example1();
        let mut rng = crate::rng_from_seed(1);
        assert_eq!(step1_run(&model, &PasipConfig::default(), s("0000"), &mut rng), vec![s("0000")]);
    }

    #[test]
    fn cyclic_attractor_run_registers_both_states() {
        let model = example1();
        let mut rng = crate::rng_from_seed(2);
        for start in [s("1000"), s("1010")] {
            assert_eq!(step1_run(&model, &PasipConfig::default(), start, &mut rng), vec![s("1000"), s("1010")]);
        }
    }

    #[test]
    fn stuck_state_registered_after_full_run() {
        let config = PasipConfig::default();
        let mut det = StepTwoDetector::new(&config);
        let mut reg = PaRegistry::new();
        for i in 0..999 {
            assert!(det.feed(s("0110"), &mut reg, i).is_empty());
        }
        assert_eq!(det.feed(s("0110"), &mut reg, 999), vec![s("0110")]);
        assert_eq!(reg.discoveries()[0].source, DiscoverySource::Stuck);
    }

    #[test]
    fn stuck_counter_resets_on_change() {
        let mut det = StepTwoDetector::new(&PasipConfig::default());
        let mut reg = PaRegistry::new();
        for i in 0..1500 {
            let st = if i == 700 { s("0001") } else { s("0110") };
            det.feed(st, &mut reg, i);
        }
        // 799 repeats after the interruption: not enough yet.
        assert!(reg.is_empty());
    }

    // Cycles over `filler` states that stay below the II-2 threshold.
    fn window(frequent: NetworkState, frequent_count: usize, known: Option<NetworkState>) -> Vec<NetworkState> {
        let mut out = Vec::with_capacity(10_000);
        let filler: Vec<NetworkState> = (0..200u64).map(|i| NetworkState::from_index(10, 300 + i)).collect();
        let (mut f, mut placed) = (0, 0);
        for i in 0..10_000 {
            if i % 6 == 0 && placed < frequent_count {
                out.push(frequent);
                placed += 1;
            } else {
                out.push(filler[f % filler.len()]);
                f += 1;
            }
        }
        if let Some(k) = known {
            out[5001] = k;
        }
        out
    }

    #[test]
    fn history_window_registers_frequent_state() {
        let frequent = NetworkState::from_index(10, 7);
        let mut det = StepTwoDetector::new(&PasipConfig::default());
        let mut reg = PaRegistry::new();
        let mut found = Vec::new();
        for (i, st) in window(frequent, 1600, None).into_iter().enumerate() {
            found.extend(det.feed(st, &mut reg, i as u64));
        }
        assert_eq!(found, vec![frequent]);
        assert_eq!(reg.discoveries()[0].source, DiscoverySource::History);
    }

    #[test]
    fn history_window_with_known_state_is_discarded() {
        let frequent = NetworkState::from_index(10, 7);
        let known = NetworkState::from_index(10, 1);
        let mut det = StepTwoDetector::new(&PasipConfig::default());
        let mut reg = PaRegistry::from_states([known], DiscoverySource::Step1);
        for (i, st) in window(frequent, 1600, Some(known)).into_iter().enumerate() {
            assert!(det.feed(st, &mut reg, i as u64).is_empty());
        }
        assert_eq!(reg.len(), 1);
        // The buffer was cleared: the next clean window is judged on its own.
        let mut found = Vec::new();
        for (i, st) in window(frequent, 1600, None).into_iter().enumerate() {
            found.extend(det.feed(st, &mut reg, 10_000 + i as u64));
        }
        assert_eq!(found, vec![frequent]);
    }

    #[test]
    fn history_threshold_is_strict() {
        let frequent = NetworkState::from_index(10, 7);
        let mut det = StepTwoDetector::new(&PasipConfig::default());
        let mut reg = PaRegistry::new();
        for (i, st) in window(frequent, 1500, None).into_iter().enumerate() {
            det.feed(st, &mut reg, i as u64);
        }
        assert!(reg.is_empty());
    }

    #[test]
    fn precision_counts() {
        let mut truth = StateSet::empty(4);
        for i in [0, 5, 8] {
            truth.insert_index(i);
        }
        let reg: Vec<NetworkState> = [0u64, 5, 3].iter().map(|&i| NetworkState::from_index(4, i)).collect();
        assert!((precision(&reg, &truth).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let exact: Vec<NetworkState> = truth.iter().collect();
        assert_eq!(precision(&exact, &truth), Some(1.0));
        assert_eq!(precision(&[], &truth), None);
    }

    #[test]
    fn registry_file_roundtrip() {
        let mut reg = PaRegistry::new();
        reg.register(s("0101"), 0, DiscoverySource::Step1);
        reg.register(s("1000"), 40, DiscoverySource::Stuck);
        reg.register(s("1010"), 41, DiscoverySource::History);
        let mut buf = Vec::new();
        reg.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "0101 step1\n1000 step2-1\n1010 step2-2\n");
        let back = PaRegistry::read_from(&buf[..]).unwrap();
        assert_eq!(back.states().collect::<Vec<_>>(), reg.states().collect::<Vec<_>>());
    }
}
