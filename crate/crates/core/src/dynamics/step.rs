use rand::Rng;

use crate::model::PbnModel;
use crate::state::NetworkState;

/// Result of updating `gene` with its `predictor`-th function at `state`.
#[inline]
pub fn apply_update(model: &PbnModel, state: NetworkState, gene: usize, predictor: usize) -> NetworkState {
    let value = model.predictors(gene)[predictor].expr.evaluate(&state);
    state.with(gene, value)
}

/// Draws a predictor index for `gene` according to its selection probabilities.
pub fn sample_predictor<R: Rng + ?Sized>(model: &PbnModel, gene: usize, rng: &mut R) -> usize {
    let list = model.predictors(gene);
    if list.len() == 1 {
        return 0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, p) in list.iter().enumerate() {
        acc += p.selection_probability;
        if u < acc {
            return j;
        }
    }
    list.len() - 1
}

/// One asynchronous update: a uniformly chosen gene is updated with a
/// predictor drawn from its selection distribution. The result may equal
/// the input state.
pub fn async_step<R: Rng + ?Sized>(model: &PbnModel, state: NetworkState, rng: &mut R) -> NetworkState {
    debug_assert_eq!(state.width(), model.gene_count());
    let gene = rng.random_range(0..model.gene_count());
    let predictor = sample_predictor(model, gene, rng);
    apply_update(model, state, gene, predictor)
}

/// Runs `steps` asynchronous updates from `start`, calling `visit` on every
/// state reached (not on `start` itself). Returns the final state.
pub fn simulate<R: Rng + ?Sized>(
    model: &PbnModel,
    start: NetworkState,
    steps: usize,
    rng: &mut R,
    mut visit: impl FnMut(NetworkState),
) -> NetworkState {
    let mut state = start;
    for _ in 0..steps {
        state = async_step(model, state, rng);
        visit(state);
    }
    state
}

/// Uncontrolled one-step kernel `P(s -> s')`, self-transition mass included.
pub fn transition_probability(model: &PbnModel, from: NetworkState, to: NetworkState) -> f64 {
    let n = model.gene_count() as f64;
    let mut total = 0.0;
    for gene in 0..model.gene_count() {
        for (j, p) in model.predictors(gene).iter().enumerate() {
            if apply_update(model, from, gene, j) == to {
                total += p.selection_probability / n;
            }
        }
    }
    total
}

/// Every state reachable in one update from `from` with its probability,
/// sorted by state; the self-transition is included when it has mass.
pub fn transitions(model: &PbnModel, from: NetworkState) -> Vec<(NetworkState, f64)> {
    let n = model.gene_count() as f64;
    let mut out: Vec<(NetworkState, f64)> = Vec::with_capacity(model.gene_count() + 1);
    for gene in 0..model.gene_count() {
        for (j, p) in model.predictors(gene).iter().enumerate() {
            let to = apply_update(model, from, gene, j);
            let mass = p.selection_probability / n;
            match out.iter_mut().find(|(s, _)| *s == to) {
                Some(entry) => entry.1 += mass,
                None => out.push((to, mass)),
            }
        }
    }
    out.sort_by_key(|(s, _)| *s);
    out
}
