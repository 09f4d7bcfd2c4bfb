//! Exact minimal source-target control for small networks.
//!
//! An intervention at state `s` of attractor `A` is a guaranteed move to
//! attractor `B` when the flipped state lies in the strong basin of `B`. The
//! minimal number of interventions is the BFS distance in the graph of such
//! moves.

use std::collections::{HashMap, VecDeque};

use crate::dynamics::{strong_basins, Attractor, Stg};
use crate::env::{format_interventions, Intervention};
use crate::state::NetworkState;

/// One intervention per visited attractor, applied at the listed state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlStrategy {
    pub steps: Vec<ControlStep>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlStep {
    pub from_attractor: usize,
    pub at: NetworkState,
    pub flips: Intervention,
    pub to_attractor: usize,
}

impl ControlStrategy {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn interventions(&self) -> Vec<Intervention> {
        self.steps.iter().map(|s| s.flips.clone()).collect()
    }

    /// Flip sequence in the `0+2;1` format.
    pub fn serialize(&self) -> String {
        format_interventions(&self.interventions())
    }
}

/// All flip sets of size `0..=max_flips` over `n` genes, by cardinality and
/// then lexicographically.
pub fn flip_sets(n: usize, max_flips: usize) -> Vec<Intervention> {
    let mut out = vec![Intervention::empty()];
    let mut current: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_flips.min(n) {
        let mut next = Vec::new();
        for set in &current {
            let start = set.last().map_or(0, |&g| g + 1);
            for g in start..n {
                let mut extended = set.clone();
                extended.push(g);
                next.push(extended);
            }
        }
        out.extend(next.iter().cloned().map(Intervention::from_sorted_unchecked));
        current = next;
    }
    out
}

/// Guaranteed single-intervention moves between attractors.
#[derive(Clone, Debug)]
pub struct ControlGraph {
    attractor_count: usize,
    /// `moves[a]` lists, per reachable attractor `b != a`, the first
    /// `(state, flips)` found in enumeration order.
    moves: Vec<Vec<ControlStep>>,
    /// Per state index: attractor whose strong basin holds it.
    owner: Vec<Option<usize>>,
    flip_sets: Vec<Intervention>,
}

impl ControlGraph {
    pub fn new(stg: &Stg, attractors: &[Attractor], max_flips: usize) -> Self {
        let n = stg.gene_count();
        let mut owner = vec![None; stg.state_count()];
        for (id, basin) in strong_basins(stg, attractors).iter().enumerate() {
            for s in basin.iter() {
                owner[s.index() as usize] = Some(id);
            }
        }
        let flip_sets = flip_sets(n, max_flips);
        let mut moves = Vec::with_capacity(attractors.len());
        for (a, attractor) in attractors.iter().enumerate() {
            let mut first: Vec<Option<ControlStep>> = vec![None; attractors.len()];
            for &state in &attractor.states {
                for flips in &flip_sets {
                    if let Some(b) = owner[flips.apply(state).index() as usize] {
                        if b != a && first[b].is_none() {
                            first[b] = Some(ControlStep { from_attractor: a, at: state, flips: flips.clone(), to_attractor: b });
                        }
                    }
                }
            }
            moves.push(first.into_iter().flatten().collect());
        }
        Self { attractor_count: attractors.len(), moves, owner, flip_sets }
    }

    pub fn attractor_count(&self) -> usize {
        self.attractor_count
    }

    /// Moves out of attractor `a`, ordered by destination id.
    pub fn moves(&self, a: usize) -> &[ControlStep] {
        &self.moves[a]
    }

    /// Shortest strategy between two attractors, `None` if unreachable.
    pub fn minimal_control(&self, source: usize, target: usize) -> Option<ControlStrategy> {
        if source == target {
            return Some(ControlStrategy { steps: Vec::new() });
        }
        self.search(source, self.moves[source].clone(), target)
    }

    /// Shortest strategy whose first intervention is applied at `state`.
    /// Unlike [`ControlGraph::minimal_control`] this cannot wait for a
    /// better state of the source attractor.
    pub fn minimal_control_from_state(
        &self,
        source: usize,
        state: NetworkState,
        target: usize,
    ) -> Option<ControlStrategy> {
        if source == target {
            return Some(ControlStrategy { steps: Vec::new() });
        }
        let mut first: Vec<Option<ControlStep>> = vec![None; self.attractor_count];
        for flips in &self.flip_sets {
            if let Some(b) = self.owner[flips.apply(state).index() as usize] {
                if b != source && first[b].is_none() {
                    first[b] = Some(ControlStep { from_attractor: source, at: state, flips: flips.clone(), to_attractor: b });
                }
            }
        }
        self.search(source, first.into_iter().flatten().collect(), target)
    }

    fn search(&self, source: usize, first_moves: Vec<ControlStep>, target: usize) -> Option<ControlStrategy> {
        let mut parent: Vec<Option<ControlStep>> = vec![None; self.attractor_count];
        let mut visited = vec![false; self.attractor_count];
        visited[source] = true;
        let mut queue = VecDeque::new();
        for m in first_moves {
            if !visited[m.to_attractor] {
                let b = m.to_attractor;
                visited[b] = true;
                queue.push_back(b);
                parent[b] = Some(m);
            }
        }
        while let Some(a) = queue.pop_front() {
            if a == target {
                break;
            }
            for m in &self.moves[a] {
                if !visited[m.to_attractor] {
                    visited[m.to_attractor] = true;
                    queue.push_back(m.to_attractor);
                    parent[m.to_attractor] = Some(m.clone());
                }
            }
        }
        if !visited[target] {
            return None;
        }
        let mut steps = Vec::new();
        let mut at = target;
        while at != source {
            let step = parent[at].clone().expect("visited node has a parent");
            at = step.from_attractor;
            steps.push(step);
        }
        steps.reverse();
        Some(ControlStrategy { steps })
    }
}

/// Convenience wrapper building the control graph for one query.
pub fn minimal_control(
    stg: &Stg,
    attractors: &[Attractor],
    source: usize,
    target: usize,
    max_flips: usize,
) -> Option<ControlStrategy> {
    ControlGraph::new(stg, attractors, max_flips).minimal_control(source, target)
}

pub fn minimal_control_from_state(
    stg: &Stg,
    attractors: &[Attractor],
    source: usize,
    state: NetworkState,
    target: usize,
    max_flips: usize,
) -> Option<ControlStrategy> {
    ControlGraph::new(stg, attractors, max_flips).minimal_control_from_state(source, state, target)
}

/// Cross-check for the BFS: enumerates attractor sequences of increasing
/// length, judging each hop by forward reachability of the flipped state
/// instead of basin membership. Returns the shortest length up to `max_len`.
pub fn brute_force_min_length(
    stg: &Stg,
    attractors: &[Attractor],
    source: usize,
    target: usize,
    max_flips: usize,
    max_len: usize,
) -> Option<usize> {
    if source == target {
        return Some(0);
    }
    let mut membership = vec![None; stg.state_count()];
    for (id, a) in attractors.iter().enumerate() {
        for s in &a.states {
            membership[s.index() as usize] = Some(id);
        }
    }
    let mut cache: HashMap<usize, Vec<usize>> = HashMap::new();
    let flips = flip_sets(stg.gene_count(), max_flips);
    // hops[a]: attractors b != a that some (state, flips) of a is certain to reach.
    let hops: Vec<Vec<usize>> = attractors
        .iter()
        .enumerate()
        .map(|(a, attractor)| {
            let mut out = Vec::new();
            for &s in &attractor.states {
                for f in &flips {
                    let start = f.apply(s).index() as usize;
                    let reach = cache.entry(start).or_insert_with(|| reachable_attractors(stg, &membership, start));
                    if let [b] = reach[..] {
                        if b != a && !out.contains(&b) {
                            out.push(b);
                        }
                    }
                }
            }
            out
        })
        .collect();

    (1..=max_len).find(|&len| {
        let mut path = vec![source];
        sequence_exists(&hops, &mut path, target, len)
    })
}

fn sequence_exists(hops: &[Vec<usize>], path: &mut Vec<usize>, target: usize, remaining: usize) -> bool {
    let last = *path.last().unwrap();
    if remaining == 0 {
        return last == target;
    }
    for &b in &hops[last] {
        if path.contains(&b) {
            continue;
        }
        path.push(b);
        let found = sequence_exists(hops, path, target, remaining - 1);
        path.pop();
        if found {
            return true;
        }
    }
    false
}

fn reachable_attractors(stg: &Stg, membership: &[Option<usize>], start: usize) -> Vec<usize> {
    let mut seen = vec![false; stg.state_count()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut found = Vec::new();
    while let Some(v) = stack.pop() {
        if let Some(a) = membership[v] {
            if !found.contains(&a) {
                found.push(a);
            }
            continue;
        }
        for &w in stg.successors(v) {
            if !seen[w as usize] {
                seen[w as usize] = true;
                stack.push(w as usize);
            }
        }
    }
    found.sort_unstable();
    found
}

/// One row of the oracle table.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub source_id: usize,
    pub target_id: usize,
    pub min_length: usize,
    pub strategy: String,
}

pub const ORACLE_CSV_HEADER: &str = "source_id,target_id,min_length,strategy";

/// Minimal control for every ordered pair; unreachable pairs are omitted.
pub fn oracle_table(graph: &ControlGraph) -> Vec<OracleRow> {
    let k = graph.attractor_count();
    let mut rows = Vec::new();
    for source in 0..k {
        for target in 0..k {
            if source == target {
                continue;
            }
            if let Some(strategy) = graph.minimal_control(source, target) {
                rows.push(OracleRow { source_id: source, target_id: target, min_length: strategy.len(), strategy: strategy.serialize() });
            }
        }
    }
    rows
}

pub fn write_oracle_csv(rows: &[OracleRow]) -> String {
    let mut out = String::from(ORACLE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.source_id, r.target_id, r.min_length, r.strategy));
    }
    out
}

pub fn parse_oracle_csv(text: &str) -> Result<Vec<OracleRow>, (usize, String)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == ORACLE_CSV_HEADER => {}
        _ => return Err((1, format!("expected header `{ORACLE_CSV_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err((i + 1, format!("expected 4 fields, found {}", fields.len())));
        }
        let num = |f: &str| f.trim().parse::<usize>().map_err(|_| (i + 1, format!("bad integer `{f}`")));
        rows.push(OracleRow {
            source_id: num(fields[0])?,
            target_id: num(fields[1])?,
            min_length: num(fields[2])?,
            strategy: fields[3].trim().to_string(),
        });
    }
    Ok(rows)
}
