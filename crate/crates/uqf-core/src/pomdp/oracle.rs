//! Brute-force oracles, independent of the WFA code paths they verify.
//!
//! [`joint_state_probs`] enumerates every hidden-state sequence consistent
//! with a history — no matrix products, no shared kernels with
//! [`crate::wfa`]. The value oracles build on it:
//!
//! * [`oracle_g`] — expected immediate reward times history probability.
//! * [`oracle_v_tilde`] — the discounted suffix sum, truncated at a horizon,
//!   computed by an exact finite-horizon recursion over hidden states.
//! * [`oracle_v_tilde_by_enumeration`] — the same sum by literally
//!   enumerating every suffix; exponential, used to cross-check the
//!   recursion at toy sizes.
//! * [`oracle_q`] — the unnormalized action value by brute force.

use crate::alphabet::{symbols, Symbol};
use crate::error::{Error, Result};
use crate::pomdp::{Pomdp, StatePolicy};

/// Enumeration guard: path counts beyond this are refused.
pub const ENUMERATION_LIMIT: f64 = 1e7;

fn guard(paths: f64) -> Result<()> {
    if paths > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard {
            paths,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(())
}

/// `[P(S_{n+1} = s, h)]_s` by exhaustive enumeration of the `k^(n+1)` hidden
/// state sequences consistent with the history.
pub fn joint_state_probs(
    model: &Pomdp,
    policy: &StatePolicy,
    history: &[Symbol],
) -> Result<Vec<f64>> {
    let k = model.num_states;
    guard((k as f64).powi(history.len() as i32 + 1))?;
    let mut out = vec![0.0; k];
    // Depth-first walk over state sequences with the running path weight.
    let mut stack: Vec<(usize, usize, f64)> = (0..k)
        .map(|s| (0usize, s, model.initial[s]))
        .collect();
    while let Some((depth, state, weight)) = stack.pop() {
        if depth == history.len() {
            out[state] += weight;
            continue;
        }
        let sym = history[depth];
        for s2 in 0..k {
            let w = weight
                * policy.prob(state, sym.action)
                * model.t(state, sym.action, s2)
                * model.z(s2, sym.action, sym.observation);
            stack.push((depth + 1, s2, w));
        }
    }
    Ok(out)
}

/// Brute-force history probability `P(h)`.
pub fn history_prob(model: &Pomdp, policy: &StatePolicy, history: &[Symbol]) -> Result<f64> {
    Ok(joint_state_probs(model, policy, history)?.iter().sum())
}

/// `g(h) = R̃(h) · P(h)` by exhaustive enumeration: sums, over hidden state
/// sequences, the path probability times the expected reward of the next
/// step, `Σ_a pi[s_last, a] · R[s_last, a]`.
pub fn oracle_g(model: &Pomdp, policy: &StatePolicy, history: &[Symbol]) -> Result<f64> {
    let joint = joint_state_probs(model, policy, history)?;
    let q = policy.expected_reward(model);
    Ok(joint.iter().zip(&q).map(|(p, r)| p * r).sum())
}

/// `Ṽ(h) = Σ_{|z| <= horizon} gamma^|z| g(hz)`, the truncated discounted
/// suffix sum.
///
/// The grouping over suffixes collapses exactly (observations sum out, so
/// suffix mass of length d factors through the policy-marginal transition
/// matrix): the value equals `Σ_s P(s, h) · w_horizon(s)` with
/// `w_0 = q` and `w_d = q + gamma · M w_{d-1}`, where
/// `M[s,s'] = Σ_a pi[s,a] T[s,a,s']` and `q` the expected one-step reward.
/// `P(s, h)` comes from exhaustive path enumeration. The discarded tail is
/// bounded by `gamma^(horizon+1) · R_max / (1 - gamma)`.
pub fn oracle_v_tilde(
    model: &Pomdp,
    policy: &StatePolicy,
    history: &[Symbol],
    gamma: f64,
    horizon: usize,
) -> Result<f64> {
    let joint = joint_state_probs(model, policy, history)?;
    let w = truncated_state_values(model, policy, gamma, horizon);
    Ok(joint.iter().zip(&w).map(|(p, v)| p * v).sum())
}

/// `w_horizon` of the recursion documented on [`oracle_v_tilde`].
fn truncated_state_values(
    model: &Pomdp,
    policy: &StatePolicy,
    gamma: f64,
    horizon: usize,
) -> Vec<f64> {
    let k = model.num_states;
    let q = policy.expected_reward(model);
    let mut w = q.clone();
    let mut next = vec![0.0; k];
    for _ in 0..horizon {
        for s in 0..k {
            let mut acc = 0.0;
            for a in 0..model.num_actions {
                let pa = policy.prob(s, a);
                if pa == 0.0 {
                    continue;
                }
                for (s2, &wv) in w.iter().enumerate() {
                    acc += pa * model.t(s, a, s2) * wv;
                }
            }
            next[s] = q[s] + gamma * acc;
        }
        std::mem::swap(&mut w, &mut next);
    }
    w
}

/// The same truncated suffix sum as [`oracle_v_tilde`] by literal
/// enumeration of every suffix; cost `|Sigma|^horizon` paths on top of the
/// per-suffix state enumeration, so only usable on toy instances.
pub fn oracle_v_tilde_by_enumeration(
    model: &Pomdp,
    policy: &StatePolicy,
    history: &[Symbol],
    gamma: f64,
    horizon: usize,
) -> Result<f64> {
    let sigma = (model.num_actions * model.num_obs) as f64;
    let suffixes = sigma.powi(horizon as i32);
    guard(suffixes * (model.num_states as f64).powi((history.len() + horizon) as i32 + 1))?;
    let alphabet = symbols(model.num_actions, model.num_obs);
    let mut total = 0.0;
    // Depth-first over suffixes; every node contributes gamma^|z| g(h z).
    let mut stack: Vec<(Vec<Symbol>, f64)> = vec![(history.to_vec(), 1.0)];
    while let Some((word, discount)) = stack.pop() {
        total += discount * oracle_g(model, policy, &word)?;
        if word.len() - history.len() == horizon {
            continue;
        }
        for &sym in &alphabet {
            let mut extended = word.clone();
            extended.push(sym);
            stack.push((extended, discount * gamma));
        }
    }
    Ok(total)
}

/// Brute-force unnormalized action value
/// `Q̃(h, a) = Σ_o Ṽ(h·(a,o)) / Pi(a|h)`, where `Pi(a|h) = Σ_s P(s|h)
/// pi[s,a]` is the history-level probability the state policy induces.
///
/// Errors when the history itself or the action after it has zero sampling
/// probability.
pub fn oracle_q(
    model: &Pomdp,
    policy: &StatePolicy,
    history: &[Symbol],
    action: usize,
    gamma: f64,
    horizon: usize,
) -> Result<f64> {
    let joint = joint_state_probs(model, policy, history)?;
    let mass: f64 = joint.iter().sum();
    if mass <= 0.0 {
        return Err(Error::ZeroProbabilityHistory);
    }
    let pi_a: f64 = joint
        .iter()
        .enumerate()
        .map(|(s, p)| p / mass * policy.prob(s, action))
        .sum();
    if pi_a <= 0.0 {
        return Err(Error::ZeroSamplingProbability { action });
    }
    let mut total = 0.0;
    let mut extended = history.to_vec();
    for o in 0..model.num_obs {
        extended.push(Symbol::new(action, o));
        total += oracle_v_tilde(model, policy, &extended, gamma, horizon)?;
        extended.pop();
    }
    Ok(total / pi_a)
}
