//! Attractor-based control of asynchronous Boolean and probabilistic Boolean
//! networks.
//!
//! The crate covers the network model and its text format ([`model`]), exact
//! asynchronous dynamics on small networks ([`dynamics`]), simulation-based
//! pseudo-attractor state identification ([`pasip`]), the source-target
//! control environment ([`env`]), a branching dueling Q-network agent
//! ([`agent`]), an exact minimal-control oracle ([`oracle`]) and the
//! evaluation harness ([`eval`]).

pub mod agent;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod eval;
pub mod model;
pub mod oracle;
pub mod pasip;
pub mod state;

pub use error::{AgentError, DynamicsError, EnvError, EvalError, ModelError};
pub use model::{PbnModel, Predictor};
pub use state::NetworkState;

/// Deterministic random source used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeds the crate's random source.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
