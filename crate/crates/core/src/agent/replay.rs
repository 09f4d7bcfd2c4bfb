use std::collections::VecDeque;

use rand::Rng;

use crate::env::{Intervention, Observation};

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub observation: Observation,
    pub action: Intervention,
    pub reward: f64,
    pub next_observation: Observation,
    pub done: bool,
}

/// Fixed-capacity FIFO buffer with uniform sampling.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    entries: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, entries: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, transition: Transition) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(transition);
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.entries.get(index)
    }

    /// `count` entries drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<&Transition> {
        assert!(!self.entries.is_empty(), "sampling from an empty buffer");
        (0..count).map(|_| &self.entries[rng.random_range(0..self.entries.len())]).collect()
    }
}
