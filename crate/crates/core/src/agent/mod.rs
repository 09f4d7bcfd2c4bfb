//! Branching dueling Q-network agent.
//!
//! One branch per gene chooses keep/flip; a shared value stream is added to
//! each branch's centred advantages. The agent is target-conditioned: the
//! observation concatenates the current state and the target representative.

mod adam;
pub mod checkpoint;
mod network;
mod replay;
mod schedule;
mod train;

use ndarray::{Array2, ArrayView2};
use rand::seq::index::sample;
use rand::Rng;

pub use adam::Adam;
pub use network::{branch_mse, Dense, ForwardPass, NetworkShape, QNetwork, Scalar};
pub use replay::{ReplayBuffer, Transition};
pub use schedule::{epb_on_discovery, EpsilonSchedule};
pub use train::{
    parse_training_log, train, write_training_log, TrainConfig, Trainer, TrainingOutcome, TrainingRecord,
    TRAINING_LOG_HEADER,
};

use crate::env::{Intervention, Observation};
use crate::error::AgentError;

#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Gradient steps between target-network syncs.
    pub target_sync: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: usize,
    pub epb_floor: f64,
    pub max_flips: usize,
    pub buffer_capacity: usize,
    /// Transitions collected before the first gradient step.
    pub warmup: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 1e-4,
            batch_size: 128,
            target_sync: 1000,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_steps: 3000,
            epb_floor: 0.3,
            max_flips: 3,
            buffer_capacity: 100_000,
            warmup: 1000,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("gamma {} outside (0, 1)", self.gamma));
        }
        if !(self.epsilon_end < self.epb_floor && self.epb_floor < self.epsilon_start) {
            return Err("need epsilon_end < epb_floor < epsilon_start".into());
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 || self.target_sync == 0 {
            return Err("batch size, buffer capacity and sync period must be positive".into());
        }
        Ok(())
    }

    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule::new(self.epsilon_start, self.epsilon_end, self.epsilon_decay_steps)
    }
}

pub fn features<F: Scalar>(observations: &[&Observation], width: usize) -> Array2<F> {
    let mut x = Array2::zeros((observations.len(), width));
    for (row, obs) in x.rows_mut().into_iter().zip(observations) {
        obs.write_features(row.into_slice().expect("rows of a standard-layout array are contiguous"));
    }
    x
}

/// Greedy choice from `branches x 2` Q-values: branches whose flip value
/// beats keep, capped to the `max_flips` largest margins (ties go to the
/// lower gene index).
pub fn greedy_action<F: Scalar>(q: ArrayView2<F>, max_flips: usize) -> Intervention {
    let mut votes: Vec<(usize, F)> =
        q.rows().into_iter().enumerate().map(|(d, r)| (d, r[1] - r[0])).filter(|&(_, m)| m > F::zero()).collect();
    votes.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
    votes.truncate(max_flips);
    let mut genes: Vec<usize> = votes.into_iter().map(|(d, _)| d).collect();
    genes.sort_unstable();
    Intervention::from_sorted_unchecked(genes)
}

/// Flip set whose size is uniform on `0..=max_flips`, then genes uniform.
pub fn random_action<R: Rng + ?Sized>(genes: usize, max_flips: usize, rng: &mut R) -> Intervention {
    let size = rng.random_range(0..=max_flips.min(genes));
    let mut chosen = sample(rng, genes, size).into_vec();
    chosen.sort_unstable();
    Intervention::from_sorted_unchecked(chosen)
}

pub fn select_action<F: Scalar, R: Rng + ?Sized>(
    params: &QNetwork<F>,
    observation: &Observation,
    epsilon: f64,
    rng: &mut R,
    max_flips: usize,
) -> Intervention {
    let genes = params.shape().branches;
    if rng.random::<f64>() < epsilon {
        return random_action(genes, max_flips, rng);
    }
    let mut x = vec![F::zero(); params.shape().inputs];
    observation.write_features(&mut x);
    greedy_action(params.q_values(&x).view(), max_flips)
}

/// `r` for terminal entries, else `r + gamma * mean_d max_a Q_d(next, a)`.
pub fn bellman_target<F: Scalar>(reward: f64, done: bool, next_q: ArrayView2<F>, gamma: f64) -> f64 {
    if done {
        return reward;
    }
    let branches = next_q.nrows();
    let total: f64 = next_q.rows().into_iter().map(|r| r[0].max(r[1]).to_f64().unwrap()).sum();
    reward + gamma * total / branches as f64
}

/// One optimizer step on `batch`; returns the loss before the update.
pub fn train_step<F: Scalar>(
    params: &mut QNetwork<F>,
    target_params: &QNetwork<F>,
    optimizer: &mut Adam<F>,
    batch: &[&Transition],
    gamma: f64,
) -> F {
    assert!(!batch.is_empty(), "empty batch");
    let width = params.shape().inputs;
    let obs: Vec<&Observation> = batch.iter().map(|t| &t.observation).collect();
    let next: Vec<&Observation> = batch.iter().map(|t| &t.next_observation).collect();
    let next_q = target_params.forward(features::<F>(&next, width).view()).q;
    let targets: Vec<F> = batch
        .iter()
        .enumerate()
        .map(|(b, t)| F::from(bellman_target(t.reward, t.done, next_q.index_axis(ndarray::Axis(0), b), gamma)).unwrap())
        .collect();
    let branches = params.shape().branches;
    let actions: Vec<Vec<bool>> = batch.iter().map(|t| t.action.mask(branches)).collect();
    let (loss, grad) = params.loss_and_gradient(features::<F>(&obs, width).view(), &actions, &targets);
    optimizer.update(params, &grad);
    loss
}

/// Online and target networks with their optimizer.
#[derive(Clone, Debug)]
pub struct Agent {
    pub config: AgentConfig,
    pub online: QNetwork<f32>,
    pub target: QNetwork<f32>,
    optimizer: Adam<f32>,
    gradient_steps: u64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(shape: NetworkShape, config: AgentConfig, rng: &mut R) -> Self {
        let online = QNetwork::new(shape, rng);
        let optimizer = Adam::new(&online, config.learning_rate as f32);
        Self { config, target: online.clone(), online, optimizer, gradient_steps: 0 }
    }

    pub fn gradient_steps(&self) -> u64 {
        self.gradient_steps
    }

    /// Gradient step plus target sync on schedule.
    pub fn learn(&mut self, batch: &[&Transition]) -> Result<f64, AgentError> {
        let loss = train_step(&mut self.online, &self.target, &mut self.optimizer, batch, self.config.gamma) as f64;
        self.gradient_steps += 1;
        if !loss.is_finite() {
            return Err(AgentError::NonFiniteLoss { step: self.gradient_steps as usize, loss });
        }
        if self.gradient_steps % self.config.target_sync == 0 {
            self.target = self.online.clone();
        }
        Ok(loss)
    }
}
