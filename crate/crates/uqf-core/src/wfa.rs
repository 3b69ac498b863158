//! Weighted finite automata over action–observation alphabets.
//!
//! A WFA `⟨alpha, {A_sigma}, omega⟩` computes `f(x) = alphaᵀ A_x1 ... A_xn omega`.
//! Besides evaluation this module provides the incremental forward state used
//! for online planning, spectral-radius checking, the Neumann-series
//! conversion of a reward-measure automaton into a UQF automaton, and the
//! per-action scores that drive greedy action selection.

use nalgebra::{DMatrix, DVector};

use crate::alphabet::Symbol;
use crate::error::{Error, Result};

/// Minimum distance of `rho(gamma * sum_of_transitions)` below one required
/// by [`Wfa::to_uqf`]. Learned automata can violate convergence; we refuse
/// loudly instead of silently shrinking gamma.
pub const SPECTRAL_RADIUS_MARGIN: f64 = 1e-9;

/// Relative residual allowed when solving the Neumann system.
pub const SOLVE_RESIDUAL_REL: f64 = 1e-10;

/// Sampling probabilities below this are treated as zero (error), not as a
/// huge score; dividing by them would propagate garbage into the argmax.
pub const MIN_SAMPLING_PROB: f64 = 1e-12;

/// A weighted finite automaton over the alphabet `actions x observations`.
///
/// `transitions[sym.id(num_obs)]` is the square matrix of the symbol.
/// Immutable after construction; evaluation and stepping are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Wfa {
    num_actions: usize,
    num_obs: usize,
    alpha: DVector<f64>,
    transitions: Vec<DMatrix<f64>>,
    omega: DVector<f64>,
}

/// Forward vector `alphaᵀ A_h` after feeding a history `h`, plus its length.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardState {
    vector: DVector<f64>,
    history_len: usize,
}

impl ForwardState {
    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }

    pub fn history_len(&self) -> usize {
        self.history_len
    }
}

impl Wfa {
    /// Builds a WFA, checking the alphabet/shape invariants and that every
    /// entry is finite.
    pub fn new(
        num_actions: usize,
        num_obs: usize,
        alpha: DVector<f64>,
        transitions: Vec<DMatrix<f64>>,
        omega: DVector<f64>,
    ) -> Result<Self> {
        let n = alpha.len();
        if omega.len() != n || transitions.len() != num_actions * num_obs {
            return Err(Error::InvalidConfig(format!(
                "WFA shape mismatch: alpha {n}, omega {}, {} transition matrices for a {}x{} alphabet",
                omega.len(),
                transitions.len(),
                num_actions,
                num_obs
            )));
        }
        for m in &transitions {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidConfig(format!(
                    "transition matrix is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let finite = alpha.iter().all(|v| v.is_finite())
            && omega.iter().all(|v| v.is_finite())
            && transitions.iter().all(|m| m.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::NonFinite);
        }
        Ok(Wfa {
            num_actions,
            num_obs,
            alpha,
            transitions,
            omega,
        })
    }

    pub fn num_states(&self) -> usize {
        self.alpha.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_obs(&self) -> usize {
        self.num_obs
    }

    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }

    pub fn transition(&self, sym: Symbol) -> Result<&DMatrix<f64>> {
        if !sym.in_alphabet(self.num_actions, self.num_obs) {
            return Err(Error::SymbolOutOfRange {
                action: sym.action,
                observation: sym.observation,
                num_actions: self.num_actions,
                num_obs: self.num_obs,
            });
        }
        Ok(&self.transitions[sym.id(self.num_obs)])
    }

    pub fn transitions(&self) -> &[DMatrix<f64>] {
        &self.transitions
    }

    /// `f(word) = alphaᵀ A_word omega`, folded left to right.
    ///
    /// The fold uses the same vector-matrix kernel as [`Wfa::step`], so
    /// stepping a word symbol by symbol and dotting `omega` reproduces this
    /// value exactly (identical operation order).
    pub fn evaluate(&self, word: &[Symbol]) -> Result<f64> {
        let mut state = self.start();
        for &sym in word {
            state = self.step(&state, sym)?;
        }
        Ok(state.vector.dot(&self.omega))
    }

    /// Forward state of the empty history (the initial weights).
    pub fn start(&self) -> ForwardState {
        ForwardState {
            vector: self.alpha.clone(),
            history_len: 0,
        }
    }

    /// Advances a forward state by one symbol: `v' = vᵀ A_sym` (O(n²)).
    pub fn step(&self, state: &ForwardState, sym: Symbol) -> Result<ForwardState> {
        let m = self.transition(sym)?;
        Ok(ForwardState {
            vector: m.tr_mul(&state.vector),
            history_len: state.history_len + 1,
        })
    }

    /// Terminal weight of a forward state: `vᵀ omega`.
    pub fn finish(&self, state: &ForwardState) -> f64 {
        state.vector.dot(&self.omega)
    }

    /// Elementwise sum of all transition matrices.
    pub fn symbol_sum(&self) -> DMatrix<f64> {
        let n = self.num_states();
        let mut sum = DMatrix::zeros(n, n);
        for m in &self.transitions {
            sum += m;
        }
        sum
    }

    /// Converts a reward-measure automaton (computing `g(h) = R̃(h)·P(h)`)
    /// into the automaton of the discounted suffix sum
    /// `Ṽ(h) = Σ_z gamma^|z| g(hz)`.
    ///
    /// Keeps `alpha` and the transitions; replaces `omega` with the solution
    /// of `(I - gamma·Σ_sigma A_sigma) omega' = omega` (a linear solve, not an
    /// explicit inverse). Requires `rho(gamma·Σ A_sigma) < 1 - 1e-9` so the
    /// underlying geometric series converges; the residual of the solve must
    /// satisfy `‖(I - gamma·M) omega' - omega‖ <= 1e-10 · ‖omega‖`.
    pub fn to_uqf(&self, gamma: f64) -> Result<Wfa> {
        let m = self.symbol_sum();
        let discounted = &m * gamma;
        let rho = spectral_radius(&discounted)?;
        if rho >= 1.0 - SPECTRAL_RADIUS_MARGIN {
            return Err(Error::SpectralRadiusTooLarge { rho });
        }
        let n = self.num_states();
        let system = DMatrix::identity(n, n) - &discounted;
        let solved = system.clone().lu().solve(&self.omega);
        let omega_prime = solved.ok_or(Error::SingularSystem)?;
        let residual = (&system * &omega_prime - &self.omega).norm();
        if residual > SOLVE_RESIDUAL_REL * self.omega.norm().max(f64::MIN_POSITIVE) {
            return Err(Error::SingularSystem);
        }
        Wfa::new(
            self.num_actions,
            self.num_obs,
            self.alpha.clone(),
            self.transitions.clone(),
            omega_prime,
        )
    }

    /// Per-action scores at a forward state:
    /// `score[a] = (Σ_o vᵀ A_(a,o) omega) / sampling_prob(a)`.
    ///
    /// The divisor is the probability the sampling policy assigns to `a`
    /// after the current history; the argmax over these scores is the greedy
    /// action. Probabilities at or below 1e-12 are an error.
    pub fn action_scores(
        &self,
        state: &ForwardState,
        mut sampling_prob: impl FnMut(usize) -> f64,
    ) -> Result<Vec<f64>> {
        let mut scores = Vec::with_capacity(self.num_actions);
        for action in 0..self.num_actions {
            let p = sampling_prob(action);
            if p.is_nan() || p <= MIN_SAMPLING_PROB {
                return Err(Error::ZeroSamplingProbability { action });
            }
            let mut total = 0.0;
            for observation in 0..self.num_obs {
                let next = self.step(state, Symbol::new(action, observation))?;
                total += self.finish(&next);
            }
            scores.push(total / p);
        }
        Ok(scores)
    }
}

/// Largest absolute eigenvalue of a square matrix, to within 1e-8.
///
/// Backed by a Schur decomposition; learned transition sums routinely have
/// complex dominant eigenvalues, which plain power iteration cannot handle.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquareMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let eigenvalues = m.complex_eigenvalues();
    Ok(eigenvalues.iter().map(|c| c.norm()).fold(0.0, f64::max))
}

/// Index of the largest score, ties broken toward the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-state automaton of the deterministic chain under the uniform
    /// policy: symbol (0,0) keeps the state, (1,0) swaps it, both scaled by
    /// the action probability 1/2; terminal weights are the state rewards.
    pub(crate) fn chain_reward_wfa() -> Wfa {
        let alpha = DVector::from_row_slice(&[1.0, 0.0]);
        let stay = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let omega = DVector::from_row_slice(&[0.0, 1.0]);
        Wfa::new(2, 1, alpha, vec![stay, swap], omega).unwrap()
    }

    #[test]
    fn evaluate_empty_word_is_alpha_dot_omega() {
        let wfa = chain_reward_wfa();
        assert_eq!(wfa.evaluate(&[]).unwrap(), 0.0);

        let generic = Wfa::new(
            1,
            1,
            DVector::from_row_slice(&[2.0, -1.0]),
            vec![DMatrix::identity(2, 2)],
            DVector::from_row_slice(&[0.5, 3.0]),
        )
        .unwrap();
        assert_eq!(generic.evaluate(&[]).unwrap(), 2.0 * 0.5 - 3.0);
    }

    #[test]
    fn evaluate_chain_single_swap() {
        let wfa = chain_reward_wfa();
        let word = [Symbol::new(1, 0)];
        assert!((wfa.evaluate(&word).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn identity_transitions_ignore_word() {
        let wfa = Wfa::new(
            2,
            1,
            DVector::from_row_slice(&[1.0, 2.0]),
            vec![DMatrix::identity(2, 2), DMatrix::identity(2, 2)],
            DVector::from_row_slice(&[3.0, -1.0]),
        )
        .unwrap();
        let expected = 1.0 * 3.0 - 2.0;
        for word in [
            vec![],
            vec![Symbol::new(0, 0)],
            vec![Symbol::new(1, 0), Symbol::new(0, 0), Symbol::new(1, 0)],
        ] {
            assert_eq!(wfa.evaluate(&word).unwrap(), expected);
        }
    }

    #[test]
    fn evaluate_rejects_symbol_outside_alphabet() {
        let wfa = chain_reward_wfa();
        let err = wfa.evaluate(&[Symbol::new(0, 1)]).unwrap_err();
        assert!(matches!(err, Error::SymbolOutOfRange { .. }));
    }

    #[test]
    fn fresh_state_is_alpha_and_fold_matches_evaluate() {
        let wfa = chain_reward_wfa();
        let start = wfa.start();
        assert_eq!(start.vector(), wfa.alpha());
        assert_eq!(start.history_len(), 0);

        let word = [Symbol::new(1, 0), Symbol::new(0, 0), Symbol::new(1, 0)];
        let mut state = wfa.start();
        for &sym in &word {
            state = wfa.step(&state, sym).unwrap();
        }
        assert_eq!(state.history_len(), 3);
        // Exact equality: same kernel, same operation order.
        assert_eq!(wfa.finish(&state), wfa.evaluate(&word).unwrap());
    }

    #[test]
    fn step_chain_swap_matches_joint_belief() {
        let wfa = chain_reward_wfa();
        let state = wfa.step(&wfa.start(), Symbol::new(1, 0)).unwrap();
        assert_eq!(state.vector().as_slice(), &[0.0, 0.5]);
    }

    #[test]
    fn symbol_sum_cases() {
        let wfa = chain_reward_wfa();
        let sum = wfa.symbol_sum();
        assert_eq!(sum, DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]));

        let zero = Wfa::new(
            2,
            1,
            DVector::zeros(2),
            vec![DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)],
            DVector::zeros(2),
        )
        .unwrap();
        assert_eq!(zero.symbol_sum(), DMatrix::zeros(2, 2));

        let single = Wfa::new(
            1,
            1,
            DVector::zeros(2),
            vec![DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0])],
            DVector::zeros(2),
        )
        .unwrap();
        assert_eq!(single.symbol_sum(), single.transitions()[0]);
    }

    #[test]
    fn spectral_radius_cases() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert!((spectral_radius(&id).unwrap() - 1.0).abs() < 1e-8);

        let half = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!((spectral_radius(&half).unwrap() - 1.0).abs() < 1e-8);

        let diag = DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, -0.9]);
        assert!((spectral_radius(&diag).unwrap() - 0.9).abs() < 1e-8);

        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            spectral_radius(&rect),
            Err(Error::NonSquareMatrix { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn to_uqf_chain_hand_inversion() {
        let wfa = chain_reward_wfa();
        let uqf = wfa.to_uqf(0.5).unwrap();
        // (I - 0.5*M)^-1 tau with M = [[.5,.5],[.5,.5]], tau = (0,1):
        // hand inversion of [[.75,-.25],[-.25,.75]] gives (0.5, 1.5).
        assert!((uqf.omega()[0] - 0.5).abs() < 1e-12);
        assert!((uqf.omega()[1] - 1.5).abs() < 1e-12);
        assert_eq!(uqf.alpha(), wfa.alpha());
        assert_eq!(uqf.transitions(), wfa.transitions());
    }

    #[test]
    fn to_uqf_gamma_zero_keeps_omega() {
        let wfa = chain_reward_wfa();
        let uqf = wfa.to_uqf(0.0).unwrap();
        assert_eq!(uqf.omega(), wfa.omega());
    }

    #[test]
    fn to_uqf_rejects_radius_at_one() {
        let wfa = chain_reward_wfa();
        // rho(symbol_sum) = 1, so gamma this close to 1 violates the margin.
        let err = wfa.to_uqf(1.0 - 1e-12).unwrap_err();
        match err {
            Error::SpectralRadiusTooLarge { rho } => assert!(rho >= 1.0 - 1e-9),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn action_scores_uniform_divisor_scales_by_action_count() {
        let wfa = chain_reward_wfa().to_uqf(0.5).unwrap();
        let state = wfa.start();
        let raw = wfa.action_scores(&state, |_| 1.0).unwrap();
        let uniform = wfa.action_scores(&state, |_| 0.5).unwrap();
        for (r, u) in raw.iter().zip(&uniform) {
            assert!((u - 2.0 * r).abs() < 1e-12);
        }
    }

    #[test]
    fn action_scores_chain_prefers_swap() {
        let wfa = chain_reward_wfa().to_uqf(0.5).unwrap();
        let scores = wfa.action_scores(&wfa.start(), |_| 0.5).unwrap();
        assert!(scores[1] > scores[0]);
        assert_eq!(argmax_lowest(&scores), 1);
    }

    #[test]
    fn action_scores_rejects_zero_probability() {
        let wfa = chain_reward_wfa().to_uqf(0.5).unwrap();
        let err = wfa
            .action_scores(&wfa.start(), |a| if a == 0 { 0.0 } else { 1.0 })
            .unwrap_err();
        assert!(matches!(
            err,
            Error::ZeroSamplingProbability { action: 0 }
        ));
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax_lowest(&[0.0, 0.0, 0.0]), 0);
        assert_eq!(argmax_lowest(&[1.0, 2.0, 2.0]), 1);
    }

    #[test]
    fn wfa_new_rejects_non_finite() {
        let err = Wfa::new(
            1,
            1,
            DVector::from_row_slice(&[f64::NAN]),
            vec![DMatrix::identity(1, 1)],
            DVector::from_row_slice(&[1.0]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFinite));
    }
}
