//! Ground-truth POMDP models: validation, simulation, belief filtering,
//! construction of the exact reward-measure WFA, and a fully-observable
//! value-iteration reference.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * Emissions condition on the **arrived** state: `Z[s', a, o]` is the
//!   probability of observing `o` after executing `a` and landing in `s'`.
//! * Rewards are a function of (state, action): `R[s, a]` is received when
//!   executing `a` in `s`. A pure state reward `r` is the special case
//!   `R[s, a] = r[s]`.
//! * [`belief_forward`] returns the **unnormalized joint** vector
//!   `[P(S_{n+1} = s, h)]_s`; the conditional belief is a normalization the
//!   caller performs when the total mass is positive.

pub mod oracle;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::Symbol;
use crate::error::{Error, Result};
use crate::rng;
use crate::wfa::Wfa;

/// Row-sum / normalization tolerance for model invariants.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Sup-norm convergence threshold for value iteration.
pub const VALUE_ITERATION_TOL: f64 = 1e-10;

/// A discrete POMDP: transitions `T[s,a,s']`, emissions `Z[s',a,o]`, rewards
/// `R[s,a]`, initial distribution `mu`, and discount `gamma` in `[0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_obs: usize,
    /// `T[s][a][s']`, flattened row-major.
    pub transition: Vec<f64>,
    /// `Z[s'][a][o]`, flattened row-major.
    pub emission: Vec<f64>,
    /// `R[s][a]`, flattened row-major.
    pub reward: Vec<f64>,
    pub initial: Vec<f64>,
    pub gamma: f64,
}

impl Pomdp {
    #[inline]
    pub fn t(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[(s * self.num_actions + a) * self.num_states + s2]
    }

    #[inline]
    pub fn z(&self, s2: usize, a: usize, o: usize) -> f64 {
        self.emission[(s2 * self.num_actions + a) * self.num_obs + o]
    }

    #[inline]
    pub fn r(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.num_actions + a]
    }

    /// Largest absolute reward (used for documentation-level tail bounds).
    pub fn reward_bound(&self) -> f64 {
        self.reward.iter().fold(0.0_f64, |m, &r| m.max(r.abs()))
    }

    /// Samples one step: `s' ~ T[s,a,·]`, then `o ~ Z[s',a,·]`; the reward is
    /// `R[s,a]`.
    pub(crate) fn step(&self, s: usize, a: usize, rng: &mut ChaCha8Rng) -> (usize, usize, f64) {
        let s2 = sample_index(
            &self.transition
                [(s * self.num_actions + a) * self.num_states..][..self.num_states],
            rng,
        );
        let o = sample_index(
            &self.emission[(s2 * self.num_actions + a) * self.num_obs..][..self.num_obs],
            rng,
        );
        (s2, o, self.r(s, a))
    }
}

/// Draws an index from an unnormalized-but-valid probability row.
fn sample_index(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

/// A state-level stochastic policy `pi[s][a] = P(a | s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePolicy {
    pub num_states: usize,
    pub num_actions: usize,
    /// `pi[s][a]`, flattened row-major.
    pub pi: Vec<f64>,
}

impl StatePolicy {
    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.pi[s * self.num_actions + a]
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        StatePolicy {
            num_states,
            num_actions,
            pi: vec![1.0 / num_actions as f64; num_states * num_actions],
        }
    }

    /// One-hot policy from a deterministic state → action map.
    pub fn deterministic(actions: &[usize], num_actions: usize) -> Self {
        let mut pi = vec![0.0; actions.len() * num_actions];
        for (s, &a) in actions.iter().enumerate() {
            pi[s * num_actions + a] = 1.0;
        }
        StatePolicy {
            num_states: actions.len(),
            num_actions,
            pi,
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.pi.len() != self.num_states * self.num_actions {
            report.push(format!(
                "policy storage has {} entries, expected {}",
                self.pi.len(),
                self.num_states * self.num_actions
            ));
            return report;
        }
        for s in 0..self.num_states {
            let row = &self.pi[s * self.num_actions..][..self.num_actions];
            check_distribution(&mut report, &format!("pi row (s={s})"), row);
        }
        report
    }

    /// Expected one-step reward per state: `q[s] = Σ_a pi[s,a] · R[s,a]`.
    pub fn expected_reward(&self, model: &Pomdp) -> Vec<f64> {
        (0..model.num_states)
            .map(|s| {
                (0..model.num_actions)
                    .map(|a| self.prob(s, a) * model.r(s, a))
                    .sum()
            })
            .collect()
    }
}

/// One simulated step. `state_after` is kept for tests and oracles only;
/// learners never read it, and the persisted form omits it.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub action: usize,
    pub observation: usize,
    pub reward: f64,
    pub state_after: usize,
}

/// A sampled trajectory `a_1 o_1 ... a_T o_T` with rewards and the seed that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub seed: u64,
    pub steps: Vec<Step>,
}

impl Episode {
    pub fn symbols(&self) -> Vec<Symbol> {
        self.steps
            .iter()
            .map(|st| Symbol::new(st.action, st.observation))
            .collect()
    }
}

/// Accumulates invariant violations; empty iff the object is valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, message: String) {
        self.violations.push(message);
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            write!(f, "ok")
        } else {
            write!(f, "{}", self.violations.join("\n"))
        }
    }
}

fn check_distribution(report: &mut ValidationReport, what: &str, row: &[f64]) {
    let mut sum = 0.0;
    for (i, &p) in row.iter().enumerate() {
        if !p.is_finite() {
            report.push(format!("{what}[{i}] is not finite"));
            return;
        }
        if p < 0.0 {
            report.push(format!("{what}[{i}] = {p} is negative"));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROBABILITY_TOL {
        report.push(format!("{what} sums to {sum}, expected 1"));
    }
}

/// Checks every model invariant and reports all violations with index paths.
pub fn validate(model: &Pomdp) -> ValidationReport {
    let mut report = ValidationReport::default();
    let k = model.num_states;
    let na = model.num_actions;
    let no = model.num_obs;
    if k == 0 || na == 0 || no == 0 {
        report.push(format!("sizes must be positive, got ({k}, {na}, {no})"));
        return report;
    }
    let expect = |name: &str, got: usize, want: usize, report: &mut ValidationReport| {
        if got != want {
            report.push(format!("{name} storage has {got} entries, expected {want}"));
        }
    };
    expect("T", model.transition.len(), k * na * k, &mut report);
    expect("Z", model.emission.len(), k * na * no, &mut report);
    expect("R", model.reward.len(), k * na, &mut report);
    expect("mu", model.initial.len(), k, &mut report);
    if !report.is_ok() {
        return report;
    }
    for s in 0..k {
        for a in 0..na {
            let row = &model.transition[(s * na + a) * k..][..k];
            check_distribution(&mut report, &format!("T row (s={s},a={a})"), row);
        }
    }
    for s2 in 0..k {
        for a in 0..na {
            let row = &model.emission[(s2 * na + a) * no..][..no];
            check_distribution(&mut report, &format!("Z row (s'={s2},a={a})"), row);
        }
    }
    check_distribution(&mut report, "mu", &model.initial);
    if !model.reward.iter().all(|r| r.is_finite()) {
        report.push("R contains a non-finite entry".to_string());
    }
    if !(0.0..1.0).contains(&model.gamma) {
        report.push(format!("gamma = {} outside [0, 1)", model.gamma));
    }
    report
}

fn require_valid(model: &Pomdp, policy: &StatePolicy) -> Result<()> {
    let report = validate(model);
    if !report.is_ok() {
        return Err(Error::InvalidModel(report.to_string()));
    }
    let report = policy.validate();
    if !report.is_ok() {
        return Err(Error::InvalidModel(report.to_string()));
    }
    if policy.num_states != model.num_states || policy.num_actions != model.num_actions {
        return Err(Error::InvalidModel(format!(
            "policy shaped ({}, {}) does not match model ({}, {})",
            policy.num_states, policy.num_actions, model.num_states, model.num_actions
        )));
    }
    Ok(())
}

/// Samples `count` episodes of exactly `length` steps under a state policy.
///
/// Step `t`: `a_t ~ pi(·|s_t)`, `s_{t+1} ~ T[s_t,a_t,·]`, `o_t ~
/// Z[s_{t+1},a_t,·]`, reward `R[s_t,a_t]`; `s_1 ~ mu`. Episode `i` runs on
/// its own ChaCha8 stream derived from `(seed, i)`, so identical seeds give
/// bit-identical output and episodes can be generated independently.
pub fn sample_episodes(
    model: &Pomdp,
    policy: &StatePolicy,
    count: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<Episode>> {
    require_valid(model, policy)?;
    let mut episodes = Vec::with_capacity(count);
    for i in 0..count {
        let episode_seed = rng::splitmix64(seed, i as u64);
        let mut stream = rng::stream(seed, i as u64);
        let mut state = sample_index(&model.initial, &mut stream);
        let mut steps = Vec::with_capacity(length);
        for _ in 0..length {
            let action = sample_index(
                &policy.pi[state * model.num_actions..][..model.num_actions],
                &mut stream,
            );
            let (next, observation, reward) = model.step(state, action, &mut stream);
            steps.push(Step {
                action,
                observation,
                reward,
                state_after: next,
            });
            state = next;
        }
        episodes.push(Episode {
            seed: episode_seed,
            steps,
        });
    }
    Ok(episodes)
}

/// Unnormalized joint state weights after a history:
/// `b(h)[s'] = P(S_{n+1} = s', h)` under the state policy.
///
/// Returns `mu` for the empty history. The total mass is `P(h)`; dividing by
/// it (when positive) yields the conditional belief.
pub fn belief_forward(model: &Pomdp, policy: &StatePolicy, history: &[Symbol]) -> Result<Vec<f64>> {
    require_valid(model, policy)?;
    let k = model.num_states;
    let mut belief = model.initial.clone();
    let mut next = vec![0.0; k];
    for sym in history {
        if !sym.in_alphabet(model.num_actions, model.num_obs) {
            return Err(Error::SymbolOutOfRange {
                action: sym.action,
                observation: sym.observation,
                num_actions: model.num_actions,
                num_obs: model.num_obs,
            });
        }
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, &value) in belief.iter().enumerate() {
            let mass = value * policy.prob(s, sym.action);
            if mass == 0.0 {
                continue;
            }
            for (s2, slot) in next.iter_mut().enumerate() {
                *slot += mass * model.t(s, sym.action, s2) * model.z(s2, sym.action, sym.observation);
            }
        }
        std::mem::swap(&mut belief, &mut next);
    }
    Ok(belief)
}

/// Per-symbol observable operators `B_(a,o)[s,s'] = pi[s,a] · T[s,a,s'] ·
/// Z[s',a,o]`, in symbol-id order.
fn observable_operators(model: &Pomdp, policy: &StatePolicy) -> Vec<DMatrix<f64>> {
    let k = model.num_states;
    let mut out = Vec::with_capacity(model.num_actions * model.num_obs);
    for a in 0..model.num_actions {
        for o in 0..model.num_obs {
            out.push(DMatrix::from_fn(k, k, |s, s2| {
                policy.prob(s, a) * model.t(s, a, s2) * model.z(s2, a, o)
            }));
        }
    }
    out
}

/// Exact WFA computing the reward-weighted trajectory measure
/// `g(h) = R̃(h) · P(h)`, where `R̃(h)` is the expected immediate reward of
/// the step following `h` under the policy.
///
/// Construction: initial weights `mu`, per-symbol operators
/// `B_(a,o) = diag(pi[·,a]) T[·,a,·] diag(Z[·,a,o])`, terminal weights
/// `tau[s] = Σ_a pi[s,a] R[s,a]` (which reduce to the state reward vector
/// when rewards are action-independent).
pub fn exact_wfa(model: &Pomdp, policy: &StatePolicy) -> Result<Wfa> {
    require_valid(model, policy)?;
    let operators = observable_operators(model, policy);
    Wfa::new(
        model.num_actions,
        model.num_obs,
        DVector::from_vec(model.initial.clone()),
        operators,
        DVector::from_vec(policy.expected_reward(model)),
    )
}

/// Exact WFA computing the trajectory probability `P(h)`: same operators as
/// [`exact_wfa`], all-ones terminal weights.
pub fn probability_wfa(model: &Pomdp, policy: &StatePolicy) -> Result<Wfa> {
    require_valid(model, policy)?;
    let operators = observable_operators(model, policy);
    Wfa::new(
        model.num_actions,
        model.num_obs,
        DVector::from_vec(model.initial.clone()),
        operators,
        DVector::from_element(model.num_states, 1.0),
    )
}

/// Value iteration on the underlying fully-observable MDP.
///
/// Iterates `V'[s] = max_a R[s,a] + gamma · Σ_s' T[s,a,s'] V[s']` until the
/// sup-norm change drops below 1e-10, then extracts the deterministic greedy
/// policy with ties broken toward the lowest action id. Used as the
/// upper-bound reference curve; it is not a POMDP optimum.
pub fn mdp_optimal(model: &Pomdp) -> Result<(Vec<f64>, Vec<usize>)> {
    let report = validate(model);
    if !report.is_ok() {
        return Err(Error::InvalidModel(report.to_string()));
    }
    let k = model.num_states;
    let mut values = vec![0.0; k];
    let mut next = vec![0.0; k];
    // gamma < 1 guarantees a contraction; the cap is a safety net.
    for _ in 0..10_000_000 {
        let mut delta = 0.0_f64;
        for s in 0..k {
            let mut best = f64::NEG_INFINITY;
            for a in 0..model.num_actions {
                let mut q = model.r(s, a);
                for (s2, &v) in values.iter().enumerate() {
                    q += model.gamma * model.t(s, a, s2) * v;
                }
                if q > best {
                    best = q;
                }
            }
            delta = delta.max((best - values[s]).abs());
            next[s] = best;
        }
        std::mem::swap(&mut values, &mut next);
        if delta < VALUE_ITERATION_TOL {
            break;
        }
    }
    let mut policy = vec![0usize; k];
    for (s, slot) in policy.iter_mut().enumerate() {
        let mut best_a = 0;
        let mut best_q = f64::NEG_INFINITY;
        for a in 0..model.num_actions {
            let mut q = model.r(s, a);
            for (s2, &v) in values.iter().enumerate() {
                q += model.gamma * model.t(s, a, s2) * v;
            }
            if q > best_q {
                best_q = q;
                best_a = a;
            }
        }
        *slot = best_a;
    }
    Ok((values, policy))
}

/// Deterministic two-state chain: action 0 keeps the state, action 1 swaps
/// it, a single observation, state rewards `(0, 1)`, start in state 0.
///
/// The standing small fixture for oracles, spectral checks and self-tests.
pub fn chain_model(gamma: f64) -> Pomdp {
    // T[s][a][s']: action 0 stays, action 1 swaps.
    let transition = vec![
        1.0, 0.0, // s=0, a=0
        0.0, 1.0, // s=0, a=1
        0.0, 1.0, // s=1, a=0  (stay in 1)
        1.0, 0.0, // s=1, a=1  (swap to 0)
    ];
    // Z[s'][a][o]: single observation.
    let emission = vec![1.0, 1.0, 1.0, 1.0];
    // R[s][a] = r[s] with r = (0, 1).
    let reward = vec![0.0, 0.0, 1.0, 1.0];
    Pomdp {
        num_states: 2,
        num_actions: 2,
        num_obs: 1,
        transition,
        emission,
        reward,
        initial: vec![1.0, 0.0],
        gamma,
    }
}
