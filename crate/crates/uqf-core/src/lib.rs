//! Learning and planning for partially observable environments with
//! unnormalized Q functions (UQF).
//!
//! The crate learns, from sampled action–observation–reward trajectories, a
//! weighted finite automaton (WFA) that computes an unnormalized action-value
//! function, and plans greedily with it. The pipeline:
//!
//! 1. [`pomdp`] — ground-truth POMDP models, simulation, belief filtering,
//!    the exact reward-measure WFA, and brute-force oracles used to verify
//!    every learned quantity.
//! 2. [`wfa`] — weighted finite automata: evaluation, forward states,
//!    spectral-radius checks, and the Neumann-series conversion from the
//!    reward-measure automaton to the UQF automaton.
//! 3. [`spectral`] — Hankel-matrix estimation from data, truncated SVD,
//!    WFA recovery, and the single-pass compressed (random-projection)
//!    variant.
//! 4. [`planner`] — UQF-greedy acting, ε-greedy sampling policies, policy
//!    evaluation, and policy iteration.
//! 5. [`envs`] — benchmark grid worlds compiled to exact POMDPs and random
//!    POMDP generators for property tests.
//!
//! All randomness is driven by explicit `u64` seeds through ChaCha8; every
//! operation is deterministic given its inputs.

pub mod alphabet;
pub mod envs;
pub mod error;
pub mod io;
pub mod planner;
pub mod pomdp;
pub mod rng;
pub mod selfcheck;
pub mod spectral;
pub mod wfa;

pub use alphabet::Symbol;
pub use error::{Error, Result};
pub use pomdp::{Episode, Pomdp, StatePolicy};
pub use spectral::{Basis, Dataset, LabeledExample, LearnConfig};
pub use wfa::{ForwardState, Wfa};
