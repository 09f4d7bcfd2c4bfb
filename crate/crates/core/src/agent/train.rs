//! Episode loop: pair sampling, epsilon-greedy acting, replay, learning.

use rand::Rng;

use super::{select_action, Agent, AgentConfig, EpsilonSchedule, NetworkShape, ReplayBuffer, Transition};
use crate::env::{ControlEnv, EnvConfig, Landmarks, Observation};
use crate::error::AgentError;
use crate::model::PbnModel;
use crate::pasip::PaRegistry;
use crate::state::NetworkState;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Total environment steps (interventions).
    pub steps: u64,
    pub agent: AgentConfig,
    pub env: EnvConfig,
    /// Defaults to [`NetworkShape::for_genes`].
    pub shape: Option<NetworkShape>,
    /// Extra micro-step budgets granted after a step ends off a registered
    /// state before the episode is cut short.
    pub max_settles: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { steps: 50_000, agent: AgentConfig::default(), env: EnvConfig::default(), shape: None, max_settles: 10 }
    }
}

/// One line of the training log, written per finished episode.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingRecord {
    pub step: u64,
    pub episode: u64,
    pub epsilon: f64,
    pub reward: f64,
    pub episode_len: usize,
    pub n_pa_states: usize,
}

pub const TRAINING_LOG_HEADER: &str = "step,episode,epsilon,reward,episode_len,n_pa_states";

pub fn write_training_log(records: &[TrainingRecord]) -> String {
    let mut out = String::from(TRAINING_LOG_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{:.6},{},{},{}\n",
            r.step, r.episode, r.epsilon, r.reward, r.episode_len, r.n_pa_states
        ));
    }
    out
}

pub fn parse_training_log(text: &str) -> Result<Vec<TrainingRecord>, (usize, String)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRAINING_LOG_HEADER => {}
        _ => return Err((1, format!("expected header `{TRAINING_LOG_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err((i + 1, format!("expected 6 fields, found {}", f.len())));
        }
        let bad = |name: &str| (i + 1, format!("bad {name}"));
        out.push(TrainingRecord {
            step: f[0].parse().map_err(|_| bad("step"))?,
            episode: f[1].parse().map_err(|_| bad("episode"))?,
            epsilon: f[2].parse().map_err(|_| bad("epsilon"))?,
            reward: f[3].parse().map_err(|_| bad("reward"))?,
            episode_len: f[4].parse().map_err(|_| bad("episode_len"))?,
            n_pa_states: f[5].parse().map_err(|_| bad("n_pa_states"))?,
        });
    }
    Ok(out)
}

/// Stateful training loop; [`train`] drives it to completion.
pub struct Trainer<'m> {
    config: TrainConfig,
    env: ControlEnv<'m>,
    agent: Agent,
    buffer: ReplayBuffer,
    schedule: EpsilonSchedule,
    landmarks: Landmarks,
    step: u64,
    episode: u64,
    log: Vec<TrainingRecord>,
}

pub struct TrainingOutcome {
    pub agent: Agent,
    pub log: Vec<TrainingRecord>,
    pub registry: PaRegistry,
    pub landmarks: Landmarks,
}

impl<'m> Trainer<'m> {
    pub fn new<R: Rng + ?Sized>(
        model: &'m PbnModel,
        registry: PaRegistry,
        landmarks: Landmarks,
        config: TrainConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        if landmarks.len() < 2 {
            return Err(AgentError::TooFewLandmarks(landmarks.len()));
        }
        config.agent.validate().map_err(AgentError::Config)?;
        let shape = config.shape.clone().unwrap_or_else(|| NetworkShape::for_genes(model.gene_count()));
        let mut env_config = config.env.clone();
        env_config.max_flips = config.agent.max_flips;
        // Exact attractors leave nothing to discover.
        env_config.detect &= landmarks.grows();
        Ok(Self {
            env: ControlEnv::new(model, registry, env_config),
            agent: Agent::new(shape, config.agent.clone(), rng),
            buffer: ReplayBuffer::new(config.agent.buffer_capacity),
            schedule: config.agent.schedule(),
            landmarks,
            step: 0,
            episode: 0,
            log: Vec::new(),
            config,
        })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn epsilon(&self) -> f64 {
        self.schedule.value()
    }

    pub fn log(&self) -> &[TrainingRecord] {
        &self.log
    }

    pub fn finished(&self) -> bool {
        self.step >= self.config.steps
    }

    /// Exploration boost as triggered by a newly registered state.
    pub fn boost_exploration(&mut self) {
        self.schedule.boost(self.config.agent.epb_floor);
    }

    fn on_discovery(&mut self, state: NetworkState) {
        self.landmarks.discover(state);
        self.boost_exploration();
    }

    /// Runs one episode (cut short at the step budget) and logs it.
    pub fn run_episode<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&TrainingRecord, AgentError> {
        let (source, target) = self.landmarks.sample_pair(rng);
        let mut obs = self.env.reset(self.landmarks.problem(source, target)?, rng)?;
        let mut total_reward = 0.0;
        let mut length = 0;
        loop {
            let action = select_action(&self.agent.online, &obs, self.schedule.value(), rng, self.config.agent.max_flips);
            self.env.set_clock(self.step);
            let out = self.env.step(&action, rng)?;
            self.step += 1;
            self.schedule.advance();
            total_reward += out.reward;
            length += 1;

            let mut discoveries = out.discoveries;
            let mut next: Observation = out.observation;
            let mut done = out.done;
            if !out.settled && !done {
                for _ in 0..self.config.max_settles {
                    let settled = self.env.settle(rng);
                    discoveries.extend(settled.discoveries);
                    next = settled.observation;
                    done = settled.done;
                    if settled.settled || done {
                        break;
                    }
                }
                if !done && !self.env.at_control_point() {
                    self.env.truncate();
                    done = true;
                }
            }
            for state in discoveries {
                self.on_discovery(state);
            }

            self.buffer.push(Transition { observation: obs, action, reward: out.reward, next_observation: next, done });
            if self.buffer.len() >= self.config.agent.warmup.max(1) {
                let batch = self.buffer.sample(self.config.agent.batch_size, rng);
                self.agent.learn(&batch)?;
            }
            obs = next;
            if done || self.finished() {
                break;
            }
        }
        self.log.push(TrainingRecord {
            step: self.step,
            episode: self.episode,
            epsilon: self.schedule.value(),
            reward: total_reward,
            episode_len: length,
            n_pa_states: self.env.registry().len(),
        });
        self.episode += 1;
        Ok(self.log.last().unwrap())
    }

    pub fn finish(self) -> TrainingOutcome {
        TrainingOutcome { agent: self.agent, log: self.log, registry: self.env.into_registry(), landmarks: self.landmarks }
    }
}

/// Trains a target-conditioned agent over uniformly sampled landmark pairs.
pub fn train<R: Rng + ?Sized>(
    model: &PbnModel,
    registry: PaRegistry,
    landmarks: Landmarks,
    config: TrainConfig,
    rng: &mut R,
) -> Result<TrainingOutcome, AgentError> {
    let mut trainer = Trainer::new(model, registry, landmarks, config, rng)?;
    while !trainer.finished() {
        trainer.run_episode(rng)?;
    }
    Ok(trainer.finish())
}
