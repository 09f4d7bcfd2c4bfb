//! Asynchronous dynamics: stochastic stepping, the state transition graph,
//! attractors, attractor-restricted stationary distributions, pseudo-attractors
//! and basins.

mod basin;
mod stationary;
mod step;
mod stg;

pub use basin::{strong_basin, strong_basins, weak_basin, StateSet};
pub use stationary::{
    count_at_or_above, pseudo_attractor, stationary_distribution, threshold_size_bound, AttractorDistribution,
    PseudoAttractor, CONVERGENCE_L1, MAX_POWER_ITERATIONS, PSEUDO_ATTRACTOR_TOLERANCE,
};
pub use step::{apply_update, async_step, sample_predictor, simulate, transition_probability, transitions};
pub use stg::{attractors, build_stg, build_stg_with_limit, scc_labels, Attractor, Stg, DEFAULT_EXHAUSTIVE_LIMIT};
