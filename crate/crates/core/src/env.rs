//! Source-target attractor control environment.
//!
//! The agent acts only at registered (pseudo-)attractor states. An action
//! flips a small set of genes at once; the network then evolves under its own
//! asynchronous dynamics until it lands on a registered state again. Every
//! visited state is fed to the online pseudo-attractor detectors, so the set
//! of registered states can grow while the environment runs.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::dynamics::{async_step, attractors, build_stg_with_limit, Attractor};
use crate::error::{DynamicsError, EnvError};
use crate::model::PbnModel;
use crate::pasip::{step1_scan, DiscoverySource, PaRegistry, PasipConfig, StepTwoDetector};
use crate::state::NetworkState;

pub const DEFAULT_MAX_FLIPS: usize = 3;
pub const DEFAULT_MAX_INTERVENTIONS: usize = 20;
pub const DEFAULT_MICRO_STEP_BUDGET: usize = 10_000;

/// A set of genes flipped simultaneously. Genes are kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Intervention {
    genes: Vec<usize>,
}

impl Intervention {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validated intervention for a network of `gene_count` genes.
    pub fn new(mut genes: Vec<usize>, gene_count: usize, max_flips: usize) -> Result<Self, EnvError> {
        genes.sort_unstable();
        if let Some(&gene) = genes.iter().find(|&&g| g >= gene_count) {
            return Err(EnvError::GeneOutOfRange { gene, genes: gene_count });
        }
        if let Some(w) = genes.windows(2).find(|w| w[0] == w[1]) {
            return Err(EnvError::DuplicateGene(w[0]));
        }
        if genes.len() > max_flips {
            return Err(EnvError::TooManyFlips { count: genes.len(), max: max_flips });
        }
        Ok(Self { genes })
    }

    pub(crate) fn from_sorted_unchecked(genes: Vec<usize>) -> Self {
        debug_assert!(genes.windows(2).all(|w| w[0] < w[1]));
        Self { genes }
    }

    pub fn genes(&self) -> &[usize] {
        &self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn apply(&self, state: NetworkState) -> NetworkState {
        state.flipped(&self.genes)
    }

    /// Per-gene flip flags of length `gene_count`.
    pub fn mask(&self, gene_count: usize) -> Vec<bool> {
        let mut mask = vec![false; gene_count];
        for &g in &self.genes {
            mask[g] = true;
        }
        mask
    }
}

/// `0+2` for genes {0, 2}; `-` for the empty intervention.
impl fmt::Display for Intervention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.genes.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.genes.iter().map(|g| g.to_string()).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Intervention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Ok(Self::empty());
        }
        let mut genes = s
            .split('+')
            .map(|g| g.trim().parse::<usize>().map_err(|_| format!("bad gene index `{g}`")))
            .collect::<Result<Vec<_>, _>>()?;
        genes.sort_unstable();
        genes.dedup();
        Ok(Self { genes })
    }
}

/// Serializes a sequence of interventions as `0+2;1;...`.
pub fn format_interventions(seq: &[Intervention]) -> String {
    seq.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

pub fn parse_interventions(text: &str) -> Result<Vec<Intervention>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(';').map(str::parse).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewardScheme {
    /// `1000 * hit - |a|`.
    Mixed,
    /// `-|a| + 100 * (hit - 1)`.
    ShiftedPenalty,
}

impl RewardScheme {
    pub const TERMINAL_BONUS: f64 = 1000.0;
    pub const PENALTY_SCALE: f64 = 100.0;

    pub fn reward(&self, reached_target: bool, flips: usize) -> f64 {
        let hit = if reached_target { 1.0 } else { 0.0 };
        let flips = flips as f64;
        match self {
            RewardScheme::Mixed => Self::TERMINAL_BONUS * hit - flips,
            RewardScheme::ShiftedPenalty => -flips + Self::PENALTY_SCALE * (hit - 1.0),
        }
    }
}

impl FromStr for RewardScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mixed" => Ok(RewardScheme::Mixed),
            "shifted" => Ok(RewardScheme::ShiftedPenalty),
            other => Err(format!("unknown reward scheme `{other}` (expected mixed|shifted)")),
        }
    }
}

/// Source and target state sets of one control task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlProblem {
    source: Vec<NetworkState>,
    target: Vec<NetworkState>,
}

impl ControlProblem {
    pub fn new(mut source: Vec<NetworkState>, mut target: Vec<NetworkState>) -> Result<Self, EnvError> {
        source.sort();
        source.dedup();
        target.sort();
        target.dedup();
        if source.is_empty() || target.is_empty() || source == target {
            return Err(EnvError::InvalidProblem);
        }
        Ok(Self { source, target })
    }

    pub fn source(&self) -> &[NetworkState] {
        &self.source
    }

    pub fn target(&self) -> &[NetworkState] {
        &self.target
    }

    pub fn is_target(&self, state: &NetworkState) -> bool {
        self.target.binary_search(state).is_ok()
    }

    /// Smallest target state; stands in for the whole target in observations.
    pub fn target_representative(&self) -> NetworkState {
        self.target[0]
    }
}

/// What the agent sees: the current state and the target representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    pub current: NetworkState,
    pub target: NetworkState,
}

impl Observation {
    /// Width of the feature vector for `gene_count` genes.
    pub fn width(gene_count: usize) -> usize {
        2 * gene_count
    }

    /// Writes current bits followed by target bits as 0/1 values.
    pub fn write_features<F: num_traits::Float>(&self, out: &mut [F]) {
        let n = self.current.width();
        self.current.write_features(&mut out[..n]);
        self.target.write_features(&mut out[n..2 * n]);
    }
}

/// Control points that source and target sets are drawn from: exact
/// attractors on small networks, otherwise single pseudo-attractor states.
/// Ids are positions in this list.
#[derive(Clone, Debug, PartialEq)]
pub struct Landmarks {
    sets: Vec<Vec<NetworkState>>,
    grows: bool,
}

impl Landmarks {
    pub fn exact(attractors: &[Attractor]) -> Self {
        Self { sets: attractors.iter().map(|a| a.states.clone()).collect(), grows: false }
    }

    /// One singleton per registered state; new discoveries are appended.
    pub fn pseudo(registry: &PaRegistry) -> Self {
        Self { sets: registry.states().map(|s| vec![s]).collect(), grows: true }
    }

    /// Exact attractors when the state space is small enough to enumerate,
    /// otherwise a PASIP Step I scan. Returns the matching registry.
    pub fn prepare<R: Rng + ?Sized>(
        model: &PbnModel,
        pasip: &PasipConfig,
        exhaustive_limit: usize,
        rng: &mut R,
    ) -> Result<(Self, PaRegistry), DynamicsError> {
        if model.gene_count() <= exhaustive_limit {
            let attrs = attractors(&build_stg_with_limit(model, exhaustive_limit)?);
            let registry =
                PaRegistry::from_states(attrs.iter().flat_map(|a| a.states.iter().copied()), DiscoverySource::Step1);
            Ok((Self::exact(&attrs), registry))
        } else {
            let registry = step1_scan(model, pasip, rng);
            Ok((Self::pseudo(&registry), registry))
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn grows(&self) -> bool {
        self.grows
    }

    pub fn get(&self, id: usize) -> &[NetworkState] {
        &self.sets[id]
    }

    pub fn sets(&self) -> &[Vec<NetworkState>] {
        &self.sets
    }

    /// Appends a singleton landmark if this list grows with discoveries.
    pub fn discover(&mut self, state: NetworkState) -> bool {
        if !self.grows || self.sets.iter().any(|s| s.contains(&state)) {
            return false;
        }
        self.sets.push(vec![state]);
        true
    }

    /// All ordered pairs of distinct ids.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let k = self.sets.len();
        (0..k).flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j))).collect()
    }

    pub fn problem(&self, source: usize, target: usize) -> Result<ControlProblem, EnvError> {
        ControlProblem::new(self.sets[source].clone(), self.sets[target].clone())
    }

    /// Uniform ordered pair of distinct ids.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let k = self.sets.len();
        assert!(k >= 2, "need two landmarks");
        let source = rng.random_range(0..k);
        let mut target = rng.random_range(0..k - 1);
        if target >= source {
            target += 1;
        }
        (source, target)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub max_flips: usize,
    pub max_interventions: usize,
    pub micro_step_budget: usize,
    pub reward: RewardScheme,
    pub pasip: PasipConfig,
    /// Run the online Step II detectors on visited states.
    pub detect: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            max_flips: DEFAULT_MAX_FLIPS,
            max_interventions: DEFAULT_MAX_INTERVENTIONS,
            micro_step_budget: DEFAULT_MICRO_STEP_BUDGET,
            reward: RewardScheme::Mixed,
            pasip: PasipConfig::default(),
            detect: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    /// False when the micro-step budget ran out before a registered state.
    pub settled: bool,
    pub micro_steps: usize,
    /// States registered by the online detectors during this step.
    pub discoveries: Vec<NetworkState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeState {
    pub current: NetworkState,
    pub interventions: usize,
    pub done: bool,
    pub success: bool,
    pub settled: bool,
}

#[derive(Clone, Debug)]
pub struct ControlEnv<'m> {
    model: &'m PbnModel,
    config: EnvConfig,
    registry: PaRegistry,
    detector: StepTwoDetector,
    problem: Option<ControlProblem>,
    episode: EpisodeState,
    clock: u64,
}

impl<'m> ControlEnv<'m> {
    pub fn new(model: &'m PbnModel, registry: PaRegistry, config: EnvConfig) -> Self {
        let detector = StepTwoDetector::new(&config.pasip);
        let zero = NetworkState::zeros(model.gene_count());
        Self {
            model,
            config,
            registry,
            detector,
            problem: None,
            episode: EpisodeState { current: zero, interventions: 0, done: true, success: false, settled: true },
            clock: 0,
        }
    }

    pub fn model(&self) -> &PbnModel {
        self.model
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn registry(&self) -> &PaRegistry {
        &self.registry
    }

    pub fn into_registry(self) -> PaRegistry {
        self.registry
    }

    pub fn episode(&self) -> &EpisodeState {
        &self.episode
    }

    pub fn problem(&self) -> Option<&ControlProblem> {
        self.problem.as_ref()
    }

    /// Step stamp recorded with new discoveries.
    pub fn set_clock(&mut self, step: u64) {
        self.clock = step;
    }

    pub fn at_control_point(&self) -> bool {
        self.registry.contains(&self.episode.current)
    }

    pub fn observation(&self) -> Observation {
        let target = self.problem.as_ref().map_or(self.episode.current, |p| p.target_representative());
        Observation { current: self.episode.current, target }
    }

    /// Starts an episode at a uniformly drawn source state.
    pub fn reset<R: Rng + ?Sized>(&mut self, problem: ControlProblem, rng: &mut R) -> Result<Observation, EnvError> {
        let n = self.model.gene_count();
        for s in problem.source.iter().chain(&problem.target) {
            if s.width() != n {
                return Err(EnvError::WidthMismatch { expected: n, found: s.width() });
            }
        }
        if let Some(unknown) = problem.source.iter().find(|s| !self.registry.contains(s)) {
            return Err(EnvError::UnknownSource(*unknown));
        }
        let start = *problem.source.choose(rng).expect("source is nonempty");
        self.episode = EpisodeState { current: start, interventions: 0, done: false, success: false, settled: true };
        self.problem = Some(problem);
        Ok(self.observation())
    }

    /// Applies an intervention at the current (registered) state and lets the
    /// network evolve until it reaches a registered state or the micro-step
    /// budget runs out.
    pub fn step<R: Rng + ?Sized>(&mut self, action: &Intervention, rng: &mut R) -> Result<StepOutcome, EnvError> {
        let n = self.model.gene_count();
        if self.episode.done {
            return Err(EnvError::EpisodeDone);
        }
        if !self.episode.settled || !self.at_control_point() {
            return Err(EnvError::NotAtControlPoint(self.episode.current));
        }
        Intervention::new(action.genes.clone(), n, self.config.max_flips)?;

        self.episode.current = action.apply(self.episode.current);
        self.episode.interventions += 1;
        let (micro_steps, discoveries) = self.evolve(rng);

        let problem = self.problem.as_ref().expect("reset before step");
        let success = problem.is_target(&self.episode.current);
        let reward = self.config.reward.reward(success, action.len());
        self.episode.settled = self.at_control_point();
        self.episode.success = success;
        self.episode.done = success || self.episode.interventions >= self.config.max_interventions;
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.episode.done,
            success,
            settled: self.episode.settled,
            micro_steps,
            discoveries,
        })
    }

    /// Continues free evolution after a step that ended off a registered
    /// state. Reaching a target state here ends the episode successfully.
    pub fn settle<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let (micro_steps, discoveries) = if self.episode.settled { (0, Vec::new()) } else { self.evolve(rng) };
        self.episode.settled = self.at_control_point();
        let success = self.problem.as_ref().is_some_and(|p| p.is_target(&self.episode.current));
        if success {
            self.episode.success = true;
            self.episode.done = true;
        }
        StepOutcome {
            observation: self.observation(),
            reward: 0.0,
            done: self.episode.done,
            success: self.episode.success,
            settled: self.episode.settled,
            micro_steps,
            discoveries,
        }
    }

    /// Ends the current episode without success.
    pub fn truncate(&mut self) {
        self.episode.done = true;
    }

    fn evolve<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (usize, Vec<NetworkState>) {
        let mut discoveries = Vec::new();
        let mut steps = 0;
        while !self.registry.contains(&self.episode.current) && steps < self.config.micro_step_budget {
            self.episode.current = async_step(self.model, self.episode.current, rng);
            steps += 1;
            if self.config.detect {
                discoveries.extend(self.detector.feed(self.episode.current, &mut self.registry, self.clock));
            }
        }
        (steps, discoveries)
    }
}
