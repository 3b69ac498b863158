//! Acting with a learned UQF automaton: greedy policies, ε-greedy sampling
//! wrappers, Monte-Carlo policy evaluation, and policy iteration.
//!
//! A [`GreedyPolicy`] pairs a UQF automaton with the sampling policy that
//! generated its training data: the per-action scores divide by exactly that
//! policy's analytic `Pi(a|h)` (never by empirical frequencies). Because
//! each policy-iteration round wraps the previous greedy policy ε-greedily,
//! the divisor chain nests; every level keeps its own forward state and is
//! advanced in lock-step, so acting costs O(Σ n_i²) per step with no history
//! replay.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pomdp::{sample_episodes, validate, Episode, Pomdp, StatePolicy, Step};
use crate::rng;
use crate::spectral::{learn_uqf, LearnConfig};
use crate::wfa::{argmax_lowest, ForwardState, Wfa};
use crate::Symbol;

/// A deterministic policy: the argmax of the UQF action scores at the
/// current history, ties broken toward the lowest action id.
#[derive(Debug, Clone)]
pub struct GreedyPolicy {
    uqf: Wfa,
    /// The sampling policy whose `Pi(a|h)` divides the scores.
    sampling: Box<HistoryPolicy>,
    forward: ForwardState,
}

/// A stochastic policy over histories: either uniform over actions, or an
/// ε-greedy wrapper around a greedy UQF policy with
/// `Pi(a|h) = (1-ε)·1[a = greedy(h)] + ε/|A|`.
#[derive(Debug, Clone)]
pub enum HistoryPolicy {
    Uniform { num_actions: usize },
    EpsilonGreedy { epsilon: f64, base: GreedyPolicy },
}

/// ε-greedy wrapper around a greedy policy; `epsilon = 1` is the pure
/// uniform sampling policy, `epsilon = 0` the deterministic greedy one.
pub fn epsilon_greedy(base: GreedyPolicy, epsilon: f64) -> Result<HistoryPolicy> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "epsilon = {epsilon} outside [0, 1]"
        )));
    }
    Ok(HistoryPolicy::EpsilonGreedy { epsilon, base })
}

impl GreedyPolicy {
    pub fn new(uqf: Wfa, sampling: HistoryPolicy) -> Self {
        let forward = uqf.start();
        GreedyPolicy {
            uqf,
            sampling: Box::new(sampling),
            forward,
        }
    }

    pub fn uqf(&self) -> &Wfa {
        &self.uqf
    }

    pub fn num_actions(&self) -> usize {
        self.uqf.num_actions()
    }

    /// Rewinds every forward state in the divisor chain to the empty history.
    pub fn reset(&mut self) {
        self.forward = self.uqf.start();
        self.sampling.reset();
    }

    /// The sampling-policy probabilities `Pi(·|h)` at the current history —
    /// the exact divisor values entering the action scores.
    pub fn divisor_probs(&self) -> Result<Vec<f64>> {
        self.sampling.action_probs()
    }

    /// UQF action scores at the current history, divided by `Pi(·|h)`.
    pub fn action_scores(&self) -> Result<Vec<f64>> {
        let probs = self.divisor_probs()?;
        self.uqf.action_scores(&self.forward, |a| probs[a])
    }

    /// The greedy action at the current history; does not advance state.
    pub fn greedy_action(&self) -> Result<usize> {
        Ok(argmax_lowest(&self.action_scores()?))
    }

    /// Advances the forward state (and the whole divisor chain) by one
    /// executed action–observation pair.
    pub fn act_and_observe(&mut self, sym: Symbol) -> Result<()> {
        self.forward = self.uqf.step(&self.forward, sym)?;
        self.sampling.observe(sym)
    }
}

impl HistoryPolicy {
    pub fn uniform(num_actions: usize) -> Self {
        HistoryPolicy::Uniform { num_actions }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            HistoryPolicy::Uniform { num_actions } => *num_actions,
            HistoryPolicy::EpsilonGreedy { base, .. } => base.num_actions(),
        }
    }

    /// `Pi(·|h)` at the current history, in closed form.
    pub fn action_probs(&self) -> Result<Vec<f64>> {
        match self {
            HistoryPolicy::Uniform { num_actions } => {
                Ok(vec![1.0 / *num_actions as f64; *num_actions])
            }
            HistoryPolicy::EpsilonGreedy { epsilon, base } => {
                let n = base.num_actions();
                let mut probs = vec![epsilon / n as f64; n];
                // At epsilon = 1 the greedy argmax is irrelevant (and the
                // base UQF may not even be queryable); skip it.
                if *epsilon < 1.0 {
                    probs[base.greedy_action()?] += 1.0 - epsilon;
                }
                Ok(probs)
            }
        }
    }

    /// Samples an action at the current history.
    pub fn sample_action(&self, rng: &mut ChaCha8Rng) -> Result<usize> {
        let n = self.num_actions();
        match self {
            HistoryPolicy::Uniform { .. } => Ok(rng.random_range(0..n)),
            HistoryPolicy::EpsilonGreedy { epsilon, base } => {
                let explore = *epsilon > 0.0 && rng.random::<f64>() < *epsilon;
                if explore {
                    Ok(rng.random_range(0..n))
                } else {
                    base.greedy_action()
                }
            }
        }
    }

    pub fn reset(&mut self) {
        if let HistoryPolicy::EpsilonGreedy { base, .. } = self {
            base.reset();
        }
    }

    pub fn observe(&mut self, sym: Symbol) -> Result<()> {
        if let HistoryPolicy::EpsilonGreedy { base, .. } = self {
            base.act_and_observe(sym)?;
        }
        Ok(())
    }
}

/// Samples episodes under a history-level policy (the policy sees only the
/// action–observation stream, never the hidden state). Episode `i` runs on
/// its own stream derived from `(seed, i)`.
pub fn sample_history_episodes(
    model: &Pomdp,
    policy: &HistoryPolicy,
    count: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<Episode>> {
    let report = validate(model);
    if !report.is_ok() {
        return Err(Error::InvalidModel(report.to_string()));
    }
    if policy.num_actions() != model.num_actions {
        return Err(Error::InvalidModel(format!(
            "policy has {} actions, model {}",
            policy.num_actions(),
            model.num_actions
        )));
    }
    let mut episodes = Vec::with_capacity(count);
    for i in 0..count {
        let episode_seed = rng::splitmix64(seed, i as u64);
        let mut stream = rng::stream(seed, i as u64);
        let mut policy = policy.clone();
        policy.reset();
        let mut state = sample_state(&model.initial, &mut stream);
        let mut steps = Vec::with_capacity(length);
        for _ in 0..length {
            let action = policy.sample_action(&mut stream)?;
            let (next, observation, reward) = model.step(state, action, &mut stream);
            steps.push(Step {
                action,
                observation,
                reward,
                state_after: next,
            });
            policy.observe(Symbol::new(action, observation))?;
            state = next;
        }
        episodes.push(Episode {
            seed: episode_seed,
            steps,
        });
    }
    Ok(episodes)
}

fn sample_state(row: &[f64], rng: &mut ChaCha8Rng) -> usize {
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

/// What to evaluate: a history-level policy or a state-level one (the
/// state-level path exists for the fully-observable reference optimum).
#[derive(Debug, Clone)]
pub enum EvalTarget<'a> {
    History(&'a HistoryPolicy),
    State(&'a StatePolicy),
}

/// Mean and standard error of discounted returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub mean_return: f64,
    pub stderr: f64,
}

/// Monte-Carlo policy evaluation: the mean over episodes of
/// `Σ_t gamma_eval^(t-1) · r_t`, truncated at `max_len` steps.
///
/// Absorbing zero-reward states make explicit termination unnecessary; runs
/// are deterministic under the seed (one derived stream per episode).
pub fn evaluate_policy(
    model: &Pomdp,
    target: EvalTarget<'_>,
    episodes: usize,
    max_len: usize,
    gamma_eval: f64,
    seed: u64,
) -> Result<EvalStats> {
    let returns: Vec<f64> = match target {
        EvalTarget::History(policy) => sample_history_episodes(model, policy, episodes, max_len, seed)?
            .iter()
            .map(|e| discounted_return(e, gamma_eval))
            .collect(),
        EvalTarget::State(policy) => sample_episodes(model, policy, episodes, max_len, seed)?
            .iter()
            .map(|e| discounted_return(e, gamma_eval))
            .collect(),
    };
    Ok(stats(&returns))
}

/// `Σ_t gamma^(t-1) r_t` over the recorded steps.
pub fn discounted_return(episode: &Episode, gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for step in &episode.steps {
        total += discount * step.reward;
        discount *= gamma;
    }
    total
}

fn stats(returns: &[f64]) -> EvalStats {
    if returns.is_empty() {
        return EvalStats {
            mean_return: 0.0,
            stderr: 0.0,
        };
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    if returns.len() < 2 {
        return EvalStats {
            mean_return: mean,
            stderr: 0.0,
        };
    }
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    EvalStats {
        mean_return: mean,
        stderr: (var / n).sqrt(),
    }
}

/// Policy iteration configuration.
#[derive(Debug, Clone)]
pub struct IterationConfig {
    /// Exploration rate of the first wrapped policy.
    pub epsilon0: f64,
    /// Per-iteration decay: `epsilon_i = epsilon0 / eta^i`. Must be > 1.
    pub eta: f64,
    /// Number of iterations.
    pub iterations: usize,
    /// Fresh trajectories sampled per iteration.
    pub episodes_per_iter: usize,
    /// Length of each sampled trajectory.
    pub episode_len: usize,
    pub learn: LearnConfig,
    pub eval_episodes: usize,
    pub eval_max_len: usize,
    pub eval_gamma: f64,
}

/// One row of policy-iteration metrics.
#[derive(Debug, Clone)]
pub struct IterationMetrics {
    pub iter: usize,
    pub epsilon: f64,
    pub episodes: usize,
    pub mean_return: f64,
    pub stderr: f64,
    pub spectral_radius: f64,
    pub rank_used: usize,
    /// Set when the learning stage failed and the previous policy was kept.
    pub error: Option<String>,
}

impl IterationMetrics {
    pub const CSV_HEADER: &'static str =
        "iter,epsilon,episodes,mean_return,stderr,spectral_radius,rank_used";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.iter,
            self.epsilon,
            self.episodes,
            self.mean_return,
            self.stderr,
            self.spectral_radius,
            self.rank_used
        )
    }
}

/// Appends metrics rows to a CSV file, writing the header exactly once
/// (when the file is created).
pub fn append_metrics_csv(path: &Path, rows: &[IterationMetrics]) -> Result<()> {
    let exists = path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    if !exists {
        writeln!(file, "{}", IterationMetrics::CSV_HEADER)?;
    }
    for row in rows {
        writeln!(file, "{}", row.csv_row())?;
    }
    Ok(())
}

/// Outcome of a policy-iteration run.
#[derive(Debug, Clone)]
pub struct PolicyIterationOutcome {
    /// The last successfully learned greedy policy, if any iteration
    /// succeeded.
    pub policy: Option<GreedyPolicy>,
    pub metrics: Vec<IterationMetrics>,
}

/// Policy iteration: wrap the current policy ε-greedily (uniform on the
/// first iteration, when no policy exists yet), sample fresh trajectories,
/// learn a UQF automaton with the wrapper as score divisor, adopt the new
/// greedy policy, decay ε. A failed learning stage keeps the previous
/// policy and records the error; the run continues.
pub fn policy_iteration(
    model: &Pomdp,
    config: &IterationConfig,
    seed: u64,
) -> Result<PolicyIterationOutcome> {
    if !(0.0..=1.0).contains(&config.epsilon0) {
        return Err(Error::InvalidConfig(format!(
            "epsilon0 = {} outside [0, 1]",
            config.epsilon0
        )));
    }
    if config.eta <= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "eta = {} must be > 1",
            config.eta
        )));
    }
    config.learn.validate()?;

    let mut current: Option<GreedyPolicy> = None;
    let mut metrics = Vec::with_capacity(config.iterations);
    for iter in 0..config.iterations {
        let epsilon = config.epsilon0 / config.eta.powi(iter as i32);
        let behavior = match &current {
            None => HistoryPolicy::uniform(model.num_actions),
            Some(policy) => {
                let mut base = policy.clone();
                base.reset();
                epsilon_greedy(base, epsilon)?
            }
        };
        let sample_seed = rng::splitmix64(seed, 2 * iter as u64);
        let eval_seed = rng::splitmix64(seed, 2 * iter as u64 + 1);
        let episodes = sample_history_episodes(
            model,
            &behavior,
            config.episodes_per_iter,
            config.episode_len,
            sample_seed,
        )?;

        let (rho, rank, error) =
            match learn_uqf(&episodes, model.num_actions, model.num_obs, &config.learn) {
                Ok(outcome) => {
                    current = Some(GreedyPolicy::new(outcome.uqf, behavior));
                    (
                        outcome.report.spectral_radius,
                        outcome.report.rank_used,
                        None,
                    )
                }
                Err(err) => (f64::NAN, 0, Some(err.to_string())),
            };

        let stats = match &current {
            Some(policy) => {
                let mut fresh = policy.clone();
                fresh.reset();
                let greedy = epsilon_greedy(fresh, 0.0)?;
                evaluate_policy(
                    model,
                    EvalTarget::History(&greedy),
                    config.eval_episodes,
                    config.eval_max_len,
                    config.eval_gamma,
                    eval_seed,
                )?
            }
            None => evaluate_policy(
                model,
                EvalTarget::History(&HistoryPolicy::uniform(model.num_actions)),
                config.eval_episodes,
                config.eval_max_len,
                config.eval_gamma,
                eval_seed,
            )?,
        };

        metrics.push(IterationMetrics {
            iter,
            epsilon,
            episodes: config.episodes_per_iter,
            mean_return: stats.mean_return,
            stderr: stats.stderr,
            spectral_radius: rho,
            rank_used: rank,
            error,
        });
    }
    Ok(PolicyIterationOutcome {
        policy: current,
        metrics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{chain_model, exact_wfa, oracle, StatePolicy};
    use crate::spectral::BasisConfig;
    use nalgebra::{DMatrix, DVector};

    fn chain_uqf() -> Wfa {
        let model = chain_model(0.5);
        let policy = StatePolicy::uniform(2, 2);
        exact_wfa(&model, &policy).unwrap().to_uqf(0.5).unwrap()
    }

    #[test]
    fn greedy_action_on_chain_is_swap() {
        let policy = GreedyPolicy::new(chain_uqf(), HistoryPolicy::uniform(2));
        assert_eq!(policy.greedy_action().unwrap(), 1);
        // Cross-checked against the brute-force argmax.
        let model = chain_model(0.5);
        let uniform = StatePolicy::uniform(2, 2);
        let qs: Vec<f64> = (0..2)
            .map(|a| oracle::oracle_q(&model, &uniform, &[], a, 0.5, 25).unwrap())
            .collect();
        assert_eq!(argmax_lowest(&qs), 1);
    }

    #[test]
    fn all_zero_transitions_tie_to_action_zero() {
        let zero = Wfa::new(
            2,
            1,
            DVector::from_row_slice(&[1.0, 0.0]),
            vec![DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)],
            DVector::from_row_slice(&[0.0, 1.0]),
        )
        .unwrap();
        let policy = GreedyPolicy::new(zero, HistoryPolicy::uniform(2));
        assert_eq!(policy.greedy_action().unwrap(), 0);
    }

    #[test]
    fn constant_divisor_does_not_change_argmax() {
        let uqf = chain_uqf();
        let by_uniform = GreedyPolicy::new(uqf.clone(), HistoryPolicy::uniform(2));
        let scores_uniform = by_uniform.action_scores().unwrap();
        let scores_unit = uqf.action_scores(&uqf.start(), |_| 1.0).unwrap();
        assert_eq!(
            argmax_lowest(&scores_uniform),
            argmax_lowest(&scores_unit)
        );
    }

    #[test]
    fn incremental_equals_batch_decisions() {
        let uqf = chain_uqf();
        let word = [
            Symbol::new(1, 0),
            Symbol::new(0, 0),
            Symbol::new(1, 0),
            Symbol::new(1, 0),
        ];
        let mut online = GreedyPolicy::new(uqf.clone(), HistoryPolicy::uniform(2));
        for &sym in &word {
            online.act_and_observe(sym).unwrap();
        }
        let mut replayed = GreedyPolicy::new(uqf, HistoryPolicy::uniform(2));
        for &sym in &word {
            replayed.act_and_observe(sym).unwrap();
        }
        assert_eq!(
            online.greedy_action().unwrap(),
            replayed.greedy_action().unwrap()
        );
    }

    #[test]
    fn stepping_cost_is_independent_of_history_length() {
        // The per-step work is one n x n vector-matrix product on a
        // fixed-size forward state; no history replay. After 100 steps the
        // state is still an n-vector with only its length counter grown.
        let uqf = chain_uqf();
        let n = uqf.num_states();
        let mut state = uqf.start();
        for t in 0..100 {
            state = uqf.step(&state, Symbol::new(t % 2, 0)).unwrap();
            assert_eq!(state.vector().len(), n);
        }
        assert_eq!(state.history_len(), 100);
    }

    #[test]
    fn no_symbols_fed_decides_from_alpha() {
        let uqf = chain_uqf();
        let policy = GreedyPolicy::new(uqf.clone(), HistoryPolicy::uniform(2));
        let scores = policy.action_scores().unwrap();
        let direct = uqf.action_scores(&uqf.start(), |_| 0.5).unwrap();
        assert_eq!(scores, direct);
    }

    #[test]
    fn epsilon_one_is_uniform_and_epsilon_zero_is_greedy() {
        let base = GreedyPolicy::new(chain_uqf(), HistoryPolicy::uniform(2));
        let uniform = epsilon_greedy(base.clone(), 1.0).unwrap();
        assert_eq!(uniform.action_probs().unwrap(), vec![0.5, 0.5]);

        let greedy = epsilon_greedy(base, 0.0).unwrap();
        assert_eq!(greedy.action_probs().unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn epsilon_greedy_closed_form_four_actions() {
        // A 4-action UQF whose greedy action at the start is 0.
        let uqf = Wfa::new(
            4,
            1,
            DVector::from_row_slice(&[1.0]),
            vec![
                DMatrix::from_row_slice(1, 1, &[2.0]),
                DMatrix::from_row_slice(1, 1, &[1.0]),
                DMatrix::from_row_slice(1, 1, &[0.5]),
                DMatrix::from_row_slice(1, 1, &[0.1]),
            ],
            DVector::from_row_slice(&[1.0]),
        )
        .unwrap();
        let base = GreedyPolicy::new(uqf, HistoryPolicy::uniform(4));
        let wrapped = epsilon_greedy(base, 0.2).unwrap();
        let probs = wrapped.action_probs().unwrap();
        assert!((probs[0] - 0.85).abs() < 1e-15);
        for p in &probs[1..] {
            assert!((p - 0.05).abs() < 1e-15);
        }
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn divisor_chain_receives_epsilon_greedy_values() {
        // The divisor entering the scores must be the analytic ε-greedy
        // formula of the wrapped policy, observed via a spy closure.
        let base = GreedyPolicy::new(chain_uqf(), HistoryPolicy::uniform(2));
        let wrapped = epsilon_greedy(base, 0.5).unwrap();
        let next = GreedyPolicy::new(chain_uqf(), wrapped);
        let divisors = next.divisor_probs().unwrap();
        // Greedy action of the base at the empty history is 1.
        assert_eq!(divisors, vec![0.25, 0.75]);

        let seen = std::cell::RefCell::new(Vec::new());
        let _ = next
            .uqf()
            .action_scores(&next.uqf().start(), |a| {
                let p = divisors[a];
                seen.borrow_mut().push(p);
                p
            })
            .unwrap();
        assert_eq!(*seen.borrow(), vec![0.25, 0.75]);
    }

    #[test]
    fn evaluate_zero_reward_model_returns_zero() {
        let mut model = chain_model(0.5);
        model.reward = vec![0.0; 4];
        let stats = evaluate_policy(
            &model,
            EvalTarget::History(&HistoryPolicy::uniform(2)),
            50,
            20,
            0.9,
            1,
        )
        .unwrap();
        assert_eq!(stats.mean_return, 0.0);
        assert_eq!(stats.stderr, 0.0);
    }

    #[test]
    fn evaluate_always_swap_geometric_series() {
        let model = chain_model(0.5);
        let always_swap = StatePolicy::deterministic(&[1, 1], 2);
        let stats = evaluate_policy(
            &model,
            EvalTarget::State(&always_swap),
            10,
            100,
            0.5,
            3,
        )
        .unwrap();
        // Rewards alternate 0, 1, 0, 1, ... giving gamma / (1 - gamma²).
        assert!((stats.mean_return - 2.0 / 3.0).abs() < 1e-9);
        // Identical returns; stderr is zero up to rounding in the variance.
        assert!(stats.stderr < 1e-12);
    }

    #[test]
    fn evaluation_is_seed_deterministic() {
        let model = chain_model(0.5);
        let uniform = HistoryPolicy::uniform(2);
        let a = evaluate_policy(&model, EvalTarget::History(&uniform), 100, 30, 0.99, 7).unwrap();
        let b = evaluate_policy(&model, EvalTarget::History(&uniform), 100, 30, 0.99, 7).unwrap();
        assert_eq!(a, b);
    }

    fn tiny_iteration_config() -> IterationConfig {
        IterationConfig {
            epsilon0: 1.0,
            eta: 2.0,
            iterations: 3,
            episodes_per_iter: 400,
            episode_len: 6,
            learn: LearnConfig {
                basis: BasisConfig {
                    max_prefixes: 8,
                    max_suffixes: 8,
                    max_len: 2,
                },
                rank: 2,
                gamma: 0.5,
                compressed: None,
            },
            eval_episodes: 200,
            eval_max_len: 30,
            eval_gamma: 0.5,
        }
    }

    #[test]
    fn single_iteration_equals_direct_uniform_learning() {
        let model = chain_model(0.5);
        let mut config = tiny_iteration_config();
        config.iterations = 1;
        let outcome = policy_iteration(&model, &config, 17).unwrap();
        let policy = outcome.policy.expect("learning succeeded");

        let episodes = sample_history_episodes(
            &model,
            &HistoryPolicy::uniform(2),
            config.episodes_per_iter,
            config.episode_len,
            rng::splitmix64(17, 0),
        )
        .unwrap();
        let direct = learn_uqf(&episodes, 2, 1, &config.learn).unwrap();
        for word in crate::alphabet::words_up_to(2, 1, 3) {
            let a = policy.uqf().evaluate(&word).unwrap();
            let b = direct.uqf.evaluate(&word).unwrap();
            assert_eq!(a, b, "word {word:?}");
        }
    }

    #[test]
    fn epsilon_decays_by_eta() {
        let model = chain_model(0.5);
        let outcome = policy_iteration(&model, &tiny_iteration_config(), 5).unwrap();
        let eps: Vec<f64> = outcome.metrics.iter().map(|m| m.epsilon).collect();
        assert_eq!(eps, vec![1.0, 0.5, 0.25]);
        assert!(outcome.metrics.iter().all(|m| m.error.is_none()));
    }

    #[test]
    fn metrics_csv_header_written_once() {
        let dir = std::env::temp_dir().join(format!("uqf-metrics-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("metrics.csv");
        let _ = std::fs::remove_file(&path);
        let rows = vec![IterationMetrics {
            iter: 0,
            epsilon: 1.0,
            episodes: 10,
            mean_return: 0.5,
            stderr: 0.1,
            spectral_radius: 0.4,
            rank_used: 2,
            error: None,
        }];
        append_metrics_csv(&path, &rows).unwrap();
        append_metrics_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let headers = text
            .lines()
            .filter(|l| *l == IterationMetrics::CSV_HEADER)
            .count();
        assert_eq!(headers, 1);
        assert_eq!(text.lines().count(), 3);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
