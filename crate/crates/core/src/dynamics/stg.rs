use crate::error::DynamicsError;
use crate::model::PbnModel;
use crate::state::NetworkState;

/// Default cap on gene count for exhaustive state-space construction.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 20;

/// Asynchronous state transition graph over all `2^n` states.
///
/// Only state-changing transitions are stored; successors of each state are
/// sorted by index.
#[derive(Clone, Debug)]
pub struct Stg {
    genes: usize,
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Stg {
    pub fn gene_count(&self) -> usize {
        self.genes
    }

    pub fn state_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn successors(&self, index: usize) -> &[u32] {
        &self.targets[self.offsets[index]..self.offsets[index + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn state(&self, index: usize) -> NetworkState {
        NetworkState::from_index(self.genes, index as u64)
    }

    pub fn has_edge(&self, from: NetworkState, to: NetworkState) -> bool {
        self.successors(from.index() as usize).binary_search(&(to.index() as u32)).is_ok()
    }

    /// All edges as state pairs, ordered by source then target.
    pub fn edges(&self) -> impl Iterator<Item = (NetworkState, NetworkState)> + '_ {
        (0..self.state_count())
            .flat_map(move |s| self.successors(s).iter().map(move |&t| (self.state(s), self.state(t as usize))))
    }

    /// Reverse adjacency in the same compressed layout.
    pub fn predecessors(&self) -> Stg {
        let count = self.state_count();
        let mut degree = vec![0usize; count + 1];
        for &t in &self.targets {
            degree[t as usize + 1] += 1;
        }
        for i in 0..count {
            degree[i + 1] += degree[i];
        }
        let offsets = degree.clone();
        let mut cursor = degree;
        let mut targets = vec![0u32; self.targets.len()];
        for s in 0..count {
            for &t in self.successors(s) {
                targets[cursor[t as usize]] = s as u32;
                cursor[t as usize] += 1;
            }
        }
        Stg { genes: self.genes, offsets, targets }
    }
}

/// Builds the STG, refusing models above `limit` genes.
pub fn build_stg_with_limit(model: &PbnModel, limit: usize) -> Result<Stg, DynamicsError> {
    let genes = model.gene_count();
    if genes > limit || genes > 31 {
        return Err(DynamicsError::TooManyGenes { genes, limit: limit.min(31) });
    }
    let count = 1usize << genes;
    let mut offsets = Vec::with_capacity(count + 1);
    let mut targets = Vec::with_capacity(count * 2);
    offsets.push(0);
    let mut succ: Vec<u32> = Vec::with_capacity(genes);
    for index in 0..count {
        let state = NetworkState::from_index(genes, index as u64);
        succ.clear();
        for gene in 0..genes {
            let current = state.get(gene);
            if model.predictors(gene).iter().any(|p| p.expr.evaluate(&state) != current) {
                succ.push(state.with(gene, !current).index() as u32);
            }
        }
        succ.sort_unstable();
        targets.extend_from_slice(&succ);
        offsets.push(targets.len());
    }
    Ok(Stg { genes, offsets, targets })
}

pub fn build_stg(model: &PbnModel) -> Result<Stg, DynamicsError> {
    build_stg_with_limit(model, DEFAULT_EXHAUSTIVE_LIMIT)
}

/// A bottom strongly connected component of the STG.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attractor {
    pub id: usize,
    /// Sorted ascending.
    pub states: Vec<NetworkState>,
}

impl Attractor {
    pub fn is_fixed_point(&self) -> bool {
        self.states.len() == 1
    }

    pub fn contains(&self, state: &NetworkState) -> bool {
        self.states.binary_search(state).is_ok()
    }

    /// Smallest state; used as the canonical representative.
    pub fn representative(&self) -> NetworkState {
        self.states[0]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Strongly connected component label for every state (iterative Tarjan).
/// Labels are assigned in completion order.
pub fn scc_labels(stg: &Stg) -> (Vec<u32>, usize) {
    const UNVISITED: u32 = u32::MAX;
    let count = stg.state_count();
    let mut index = vec![UNVISITED; count];
    let mut low = vec![0u32; count];
    let mut on_stack = vec![false; count];
    let mut label = vec![UNVISITED; count];
    let mut stack: Vec<u32> = Vec::new();
    let mut calls: Vec<(u32, usize)> = Vec::new();
    let mut next_index = 0u32;
    let mut components = 0usize;

    for root in 0..count {
        if index[root] != UNVISITED {
            continue;
        }
        calls.push((root as u32, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root as u32);
        on_stack[root] = true;

        while let Some(top) = calls.last_mut() {
            let v = top.0 as usize;
            let succ = stg.successors(v);
            if top.1 < succ.len() {
                let w = succ[top.1] as usize;
                top.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w as u32);
                    on_stack[w] = true;
                    calls.push((w as u32, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(parent, _)) = calls.last() {
                let parent = parent as usize;
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow") as usize;
                    on_stack[w] = false;
                    label[w] = components as u32;
                    if w == v {
                        break;
                    }
                }
                components += 1;
            }
        }
    }
    (label, components)
}

/// Bottom SCCs of the STG ordered by their smallest state; ids follow that order.
pub fn attractors(stg: &Stg) -> Vec<Attractor> {
    let (label, components) = scc_labels(stg);
    let mut is_bottom = vec![true; components];
    let mut members: Vec<Vec<NetworkState>> = vec![Vec::new(); components];
    for s in 0..stg.state_count() {
        let c = label[s] as usize;
        if stg.successors(s).iter().any(|&t| label[t as usize] as usize != c) {
            is_bottom[c] = false;
        }
        members[c].push(stg.state(s));
    }
    let mut out: Vec<Attractor> = members
        .into_iter()
        .zip(is_bottom)
        .filter(|(_, bottom)| *bottom)
        .map(|(states, _)| Attractor { id: 0, states })
        .collect();
    out.sort_by_key(|a| a.states[0]);
    for (id, a) in out.iter_mut().enumerate() {
        a.id = id;
    }
    out
}
