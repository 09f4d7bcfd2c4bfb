use super::step::transitions;
use super::stg::Attractor;
use crate::error::DynamicsError;
use crate::model::PbnModel;
use crate::state::NetworkState;

pub const MAX_POWER_ITERATIONS: usize = 1_000_000;
pub const CONVERGENCE_L1: f64 = 1e-12;

/// Slack applied to the `1/|A|` pseudo-attractor threshold so that a
/// numerically uniform distribution keeps every state.
pub const PSEUDO_ATTRACTOR_TOLERANCE: f64 = 1e-9;

/// Stationary distribution of the chain restricted to one attractor.
#[derive(Clone, Debug, PartialEq)]
pub struct AttractorDistribution {
    pub attractor_id: usize,
    /// Same order as the attractor's states.
    pub states: Vec<NetworkState>,
    pub probabilities: Vec<f64>,
}

impl AttractorDistribution {
    pub fn probability(&self, state: &NetworkState) -> Option<f64> {
        self.states.binary_search(state).ok().map(|i| self.probabilities[i])
    }
}

/// States of an attractor whose stationary mass is at least `1/|A|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoAttractor {
    pub attractor_id: usize,
    pub states: Vec<NetworkState>,
}

/// Solves `pi P = pi` on the attractor by power iteration.
///
/// Iterates the lazy kernel `(P + I) / 2`, which shares its stationary
/// distribution with `P` and is aperiodic. Self-loop mass stays in `P`.
pub fn stationary_distribution(model: &PbnModel, attractor: &Attractor) -> Result<AttractorDistribution, DynamicsError> {
    let states = attractor.states.clone();
    let size = states.len();
    if size == 1 {
        return Ok(AttractorDistribution { attractor_id: attractor.id, states, probabilities: vec![1.0] });
    }
    let mut kernel: Vec<(u32, u32, f64)> = Vec::new();
    for (i, s) in states.iter().enumerate() {
        for (t, p) in transitions(model, *s) {
            let j = states.binary_search(&t).expect("attractor is not closed under transitions");
            kernel.push((i as u32, j as u32, p));
        }
    }
    let mut pi = vec![1.0 / size as f64; size];
    let mut next = vec![0.0; size];
    let mut delta = f64::INFINITY;
    for _ in 0..MAX_POWER_ITERATIONS {
        next.iter_mut().zip(&pi).for_each(|(n, p)| *n = 0.5 * p);
        for &(i, j, p) in &kernel {
            next[j as usize] += 0.5 * pi[i as usize] * p;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        delta = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < CONVERGENCE_L1 {
            return Ok(AttractorDistribution { attractor_id: attractor.id, states, probabilities: pi });
        }
    }
    Err(DynamicsError::NoConvergence { iterations: MAX_POWER_ITERATIONS, delta })
}

pub fn pseudo_attractor(distribution: &AttractorDistribution) -> PseudoAttractor {
    let threshold = 1.0 / distribution.states.len() as f64 - PSEUDO_ATTRACTOR_TOLERANCE;
    let states = distribution
        .states
        .iter()
        .zip(&distribution.probabilities)
        .filter(|(_, &p)| p >= threshold)
        .map(|(s, _)| *s)
        .collect();
    PseudoAttractor { attractor_id: distribution.attractor_id, states }
}

/// Number of entries of `probabilities` at or above `fraction`.
pub fn count_at_or_above(probabilities: &[f64], fraction: f64) -> usize {
    probabilities.iter().filter(|&&p| p >= fraction).count()
}

/// Largest number of states of an attractor of `attractor_size` states that
/// can reach a `k_percent` occupancy threshold simultaneously.
pub fn threshold_size_bound(k_percent: u32, attractor_size: usize) -> usize {
    assert!(k_percent >= 1 && k_percent <= 100);
    let ratio = (100 / k_percent) as usize;
    if 100 % k_percent == 0 && attractor_size > ratio {
        ratio - 1
    } else {
        ratio
    }
}
