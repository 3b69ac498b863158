//! Built-in oracle equivalence checks on fixed fixtures.
//!
//! Each check compares an algebraic code path against an independent
//! brute-force route and reports the largest observed error next to its
//! bound. The CLI `selfcheck` subcommand runs all of them; unit tests also
//! call them with perturbed inputs to confirm they actually bite.

use crate::alphabet::words_up_to;
use crate::envs::random_pomdp;
use crate::error::Result;
use crate::pomdp::{
    chain_model, exact_wfa, oracle, probability_wfa, Pomdp, StatePolicy,
};
use crate::spectral::{
    analytic_dataset, compressed_estimate, estimate_hankel, recover_wfa, recover_wfa_compressed,
    Basis, JlProjection,
};
use crate::wfa::Wfa;

/// Result of one check: the largest observed error against its bound.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub max_error: f64,
    pub bound: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.bound
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<38} max error {:>12.3e}  bound {:>9.1e}  {}",
            self.name,
            self.max_error,
            self.bound,
            if self.passed() { "ok" } else { "FAIL" }
        )
    }
}

fn fixtures() -> Vec<(Pomdp, StatePolicy)> {
    let mut out = vec![(chain_model(0.5), StatePolicy::uniform(2, 2))];
    for seed in [101, 102] {
        let model = random_pomdp(3, 2, 2, 1.0, 1.0, 0.9, seed);
        let policy = StatePolicy::uniform(3, 2);
        out.push((model, policy));
    }
    out
}

/// The exact reward-measure WFA must reproduce the path-enumeration value
/// of `g` on every short history.
pub fn check_exact_wfa(model: &Pomdp, policy: &StatePolicy, wfa: &Wfa) -> Result<CheckResult> {
    let mut max_error = 0.0_f64;
    for word in words_up_to(model.num_actions, model.num_obs, 3) {
        let truth = oracle::oracle_g(model, policy, &word)?;
        let value = wfa.evaluate(&word)?;
        max_error = max_error.max((truth - value).abs());
    }
    Ok(CheckResult {
        name: "exact-wfa vs path enumeration",
        max_error,
        bound: 1e-10,
    })
}

/// The probability automaton must reproduce brute-force history
/// probabilities, and fixed-length masses must sum to one.
pub fn check_probability_identity(model: &Pomdp, policy: &StatePolicy) -> Result<CheckResult> {
    let wfa = probability_wfa(model, policy)?;
    let mut max_error = 0.0_f64;
    let mut length3_total = 0.0;
    for word in words_up_to(model.num_actions, model.num_obs, 3) {
        let truth = oracle::history_prob(model, policy, &word)?;
        let value = wfa.evaluate(&word)?;
        max_error = max_error.max((truth - value).abs());
        if word.len() == 3 {
            length3_total += value;
        }
    }
    max_error = max_error.max((length3_total - 1.0).abs());
    Ok(CheckResult {
        name: "trajectory probability identity",
        max_error,
        bound: 1e-10,
    })
}

/// The Neumann terminal weights must match the truncated geometric series
/// within its tail bound, and the chain fixture must hit its hand-computed
/// weights exactly.
pub fn check_neumann_terminal_weights(
    model: &Pomdp,
    policy: &StatePolicy,
    gamma: f64,
) -> Result<CheckResult> {
    let wfa = exact_wfa(model, policy)?;
    let uqf = wfa.to_uqf(gamma)?;
    let m = wfa.symbol_sum() * gamma;
    let rho = crate::wfa::spectral_radius(&m)?;
    let terms = 50;
    let mut series = wfa.omega().clone();
    let mut power = wfa.omega().clone();
    for _ in 0..terms {
        power = &m * power;
        series += &power;
    }
    let gap = (uqf.omega() - series).abs().max();
    let tau_norm = wfa.omega().abs().max();
    // Geometric tail of the discarded terms, plus a round-off floor: at
    // small gamma the analytic tail drops below what f64 solves resolve.
    let bound = rho.powi(terms + 1) / (1.0 - rho) * tau_norm + 1e-12 * tau_norm.max(1.0);
    Ok(CheckResult {
        name: "neumann terminal-weight series",
        max_error: gap,
        bound,
    })
}

/// Chain fixture at gamma = 1/2: hand inversion gives omega = (0.5, 1.5).
pub fn check_chain_hand_inversion() -> Result<CheckResult> {
    let model = chain_model(0.5);
    let policy = StatePolicy::uniform(2, 2);
    let uqf = exact_wfa(&model, &policy)?.to_uqf(0.5)?;
    let max_error = (uqf.omega()[0] - 0.5)
        .abs()
        .max((uqf.omega()[1] - 1.5).abs());
    Ok(CheckResult {
        name: "chain hand-inverted terminal weights",
        max_error,
        bound: 1e-12,
    })
}

/// Spectral recovery from exactly populated Hankel blocks must reproduce
/// `g` on longer strings than the basis covers.
pub fn check_exact_moment_recovery(model: &Pomdp, policy: &StatePolicy) -> Result<CheckResult> {
    let basis = Basis::exhaustive(model.num_actions, model.num_obs, 2);
    let data = analytic_dataset(model, policy, 5)?;
    let estimate = estimate_hankel(&data, &basis, model.num_actions, model.num_obs);
    let recovered = recover_wfa(&estimate, model.num_states)?;
    let mut max_error = 0.0_f64;
    for word in words_up_to(model.num_actions, model.num_obs, 4) {
        let truth = oracle::oracle_g(model, policy, &word)?;
        let value = recovered.evaluate(&word)?;
        max_error = max_error.max((truth - value).abs());
    }
    Ok(CheckResult {
        name: "exact-moment spectral recovery",
        max_error,
        bound: 1e-8,
    })
}

/// With identity projections, the compressed path must agree with the plain
/// path everywhere.
pub fn check_compressed_identity(model: &Pomdp, policy: &StatePolicy) -> Result<CheckResult> {
    let basis = Basis::exhaustive(model.num_actions, model.num_obs, 2);
    let data = analytic_dataset(model, policy, 5)?;
    let estimate = estimate_hankel(&data, &basis, model.num_actions, model.num_obs);
    let plain = recover_wfa(&estimate, model.num_states)?;

    let proj_u = JlProjection::identity_over(&basis.prefixes);
    let proj_v = JlProjection::identity_over(&basis.suffixes);
    let sketch = compressed_estimate(
        &data,
        &basis,
        &proj_u,
        &proj_v,
        model.num_actions,
        model.num_obs,
    )?;
    let compressed = recover_wfa_compressed(&sketch, &basis, &proj_u, model.num_states)?;

    let mut max_error = 0.0_f64;
    for word in words_up_to(model.num_actions, model.num_obs, 3) {
        let a = plain.evaluate(&word)?;
        let b = compressed.evaluate(&word)?;
        max_error = max_error.max((a - b).abs());
    }
    Ok(CheckResult {
        name: "compressed identity reduction",
        max_error,
        bound: 1e-10,
    })
}

/// Collapses per-fixture results into the one with the worst margin
/// (largest error relative to its own bound), so the merged result passes
/// iff every sub-check passes.
fn merge(name: &'static str, checks: Vec<CheckResult>) -> CheckResult {
    let worst = checks
        .into_iter()
        .max_by(|a, b| {
            let ra = a.max_error / a.bound;
            let rb = b.max_error / b.bound;
            ra.partial_cmp(&rb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one fixture");
    CheckResult { name, ..worst }
}

/// Runs every check on the built-in fixtures.
pub fn run_all() -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    let fixtures = fixtures();
    let mut exact = Vec::new();
    let mut prob = Vec::new();
    let mut neumann = Vec::new();
    let mut recovery = Vec::new();
    let mut compressed = Vec::new();
    for (model, policy) in &fixtures {
        let wfa = exact_wfa(model, policy)?;
        exact.push(check_exact_wfa(model, policy, &wfa)?);
        prob.push(check_probability_identity(model, policy)?);
        for gamma in [0.3, 0.9] {
            neumann.push(check_neumann_terminal_weights(model, policy, gamma)?);
        }
        recovery.push(check_exact_moment_recovery(model, policy)?);
        compressed.push(check_compressed_identity(model, policy)?);
    }
    results.push(merge("exact-wfa vs path enumeration", exact));
    results.push(merge("trajectory probability identity", prob));
    results.push(merge("neumann terminal-weight series", neumann));
    results.push(check_chain_hand_inversion()?);
    results.push(merge("exact-moment spectral recovery", recovery));
    results.push(merge("compressed identity reduction", compressed));
    Ok(results)
}
