use super::stg::{Attractor, Stg};
use crate::state::NetworkState;

/// Dense set of states of an STG, indexed by state index.
#[derive(Clone, PartialEq, Eq)]
pub struct StateSet {
    genes: usize,
    members: Vec<bool>,
    len: usize,
}

impl StateSet {
    pub fn empty(genes: usize) -> Self {
        Self { genes, members: vec![false; 1 << genes], len: 0 }
    }

    pub fn contains(&self, state: &NetworkState) -> bool {
        self.contains_index(state.index() as usize)
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.members[index]
    }

    pub fn insert_index(&mut self, index: usize) -> bool {
        let fresh = !self.members[index];
        if fresh {
            self.members[index] = true;
            self.len += 1;
        }
        fresh
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = NetworkState> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| NetworkState::from_index(self.genes, i as u64))
    }

    pub fn is_subset(&self, other: &StateSet) -> bool {
        self.members.iter().zip(&other.members).all(|(a, b)| !a || *b)
    }

    pub fn is_disjoint(&self, other: &StateSet) -> bool {
        self.members.iter().zip(&other.members).all(|(a, b)| !(a & b))
    }
}

impl std::fmt::Debug for StateSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

fn backward_closure(reverse: &Stg, seeds: impl Iterator<Item = usize>) -> StateSet {
    let mut set = StateSet::empty(reverse.gene_count());
    let mut queue: Vec<usize> = Vec::new();
    for s in seeds {
        if set.insert_index(s) {
            queue.push(s);
        }
    }
    while let Some(v) = queue.pop() {
        for &p in reverse.successors(v) {
            if set.insert_index(p as usize) {
                queue.push(p as usize);
            }
        }
    }
    set
}

/// States from which `attractor` is reachable.
pub fn weak_basin(stg: &Stg, attractor: &Attractor) -> StateSet {
    weak_basin_in(&stg.predecessors(), attractor)
}

fn weak_basin_in(reverse: &Stg, attractor: &Attractor) -> StateSet {
    backward_closure(reverse, attractor.states.iter().map(|s| s.index() as usize))
}

/// States from which `attractors[target]` is the only reachable attractor.
/// `attractors` must be the complete attractor list of `stg`.
pub fn strong_basin(stg: &Stg, attractors: &[Attractor], target: usize) -> StateSet {
    strong_basins(stg, attractors).swap_remove(target)
}

/// Strong basins of all attractors, in attractor order.
pub fn strong_basins(stg: &Stg, attractors: &[Attractor]) -> Vec<StateSet> {
    let reverse = stg.predecessors();
    let weak: Vec<StateSet> = attractors.iter().map(|a| weak_basin_in(&reverse, a)).collect();
    let mut hits = vec![0u16; stg.state_count()];
    for basin in &weak {
        for (i, h) in hits.iter_mut().enumerate() {
            if basin.contains_index(i) {
                *h += 1;
            }
        }
    }
    weak.into_iter()
        .map(|basin| {
            let mut strong = StateSet::empty(stg.gene_count());
            for (i, &h) in hits.iter().enumerate() {
                if h == 1 && basin.contains_index(i) {
                    strong.insert_index(i);
                }
            }
            strong
        })
        .collect()
}
