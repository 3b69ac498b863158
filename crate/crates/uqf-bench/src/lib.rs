//! Shared fixtures for the pipeline benchmarks.

use uqf_core::envs::{builtin_gridworld, compile_gridworld};
use uqf_core::pomdp::{sample_episodes, Episode, Pomdp, StatePolicy};

/// Grid world A with a uniform behavior policy and a training set.
pub fn gridworld_fixture(episodes: usize, length: usize) -> (Pomdp, Vec<Episode>) {
    let spec = builtin_gridworld("A").expect("builtin exists");
    let model = compile_gridworld(&spec).expect("compiles");
    let uniform = StatePolicy::uniform(model.num_states, model.num_actions);
    let data = sample_episodes(&model, &uniform, episodes, length, 7).expect("samples");
    (model, data)
}
