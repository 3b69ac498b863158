//! Spectral learning of the UQF automaton from trajectories.
//!
//! The target function is the reward-weighted trajectory measure
//! `g(h) = R̃(h) · P(h)`. Prefix-labeled examples extracted from episodes
//! give unbiased single-sample estimates of `g`; arranging their averages in
//! Hankel blocks `H_lambda[u,v] = ĝ(uv)` and `H_sigma[u,v] = ĝ(u sigma v)`
//! and factorizing `H_lambda` by a truncated SVD recovers a WFA computing
//! `g`, which the Neumann conversion then turns into the UQF automaton.
//! [`compressed`] holds the single-pass random-projection variant that never
//! materializes the Hankel blocks.
//!
//! Estimation accumulates by plain addition over examples, so shards could
//! be merged by summing; everything here runs single-shard, which is what
//! makes runs bit-reproducible (merging reassociates float sums).

pub mod compressed;
pub mod svd;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::alphabet::{symbols, Symbol};
use crate::error::{Error, Result};
use crate::pomdp::{validate, Episode, Pomdp, StatePolicy};
use crate::wfa::{spectral_radius, Wfa};

pub use compressed::{
    compressed_estimate, recover_wfa_compressed, recover_wfa_compressed_detailed,
    CompressedSketch, JlProjection,
};
pub use svd::{truncated_svd, TruncatedSvd, SV_RELATIVE_FLOOR};

/// One training example: a prefix of a trajectory and the immediate reward
/// observed at the step right after it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub prefix: Vec<Symbol>,
    pub label: f64,
}

/// Prefix-labeled examples plus the number of examples per prefix length
/// (the per-length normalizer of the Hankel estimates).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub count_by_length: Vec<u64>,
}

impl Dataset {
    pub fn from_examples(examples: Vec<LabeledExample>) -> Self {
        let max_len = examples.iter().map(|e| e.prefix.len()).max();
        let mut count_by_length = vec![0u64; max_len.map_or(0, |m| m + 1)];
        for e in &examples {
            count_by_length[e.prefix.len()] += 1;
        }
        Dataset {
            examples,
            count_by_length,
        }
    }

    pub fn count_for_len(&self, len: usize) -> u64 {
        self.count_by_length.get(len).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Ordered prefix and suffix sets of a Hankel sub-block; the empty word sits
/// at index 0 on both sides so the initial and terminal weights can be read
/// off the factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    pub prefixes: Vec<Vec<Symbol>>,
    pub suffixes: Vec<Vec<Symbol>>,
}

impl Basis {
    pub fn new(prefixes: Vec<Vec<Symbol>>, suffixes: Vec<Vec<Symbol>>) -> Result<Self> {
        for (name, side) in [("prefixes", &prefixes), ("suffixes", &suffixes)] {
            if side.first().is_none_or(|w| !w.is_empty()) {
                return Err(Error::InvalidConfig(format!(
                    "basis {name} must start with the empty word"
                )));
            }
            let mut seen = std::collections::HashSet::new();
            if !side.iter().all(|w| seen.insert(w.clone())) {
                return Err(Error::InvalidConfig(format!("basis {name} contain duplicates")));
            }
        }
        Ok(Basis { prefixes, suffixes })
    }

    /// All words up to `max_len` on both sides — complete for any function
    /// of rank reachable at that depth. Only usable on tiny alphabets.
    pub fn exhaustive(num_actions: usize, num_obs: usize, max_len: usize) -> Self {
        let words = crate::alphabet::words_up_to(num_actions, num_obs, max_len);
        Basis {
            prefixes: words.clone(),
            suffixes: words,
        }
    }

    fn index(side: &[Vec<Symbol>]) -> HashMap<Vec<Symbol>, usize> {
        side.iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect()
    }
}

/// Estimated Hankel blocks over a basis: `h_lambda[i,j] ≈ g(u_i v_j)` and
/// `h_sigma[sym.id][i,j] ≈ g(u_i sym v_j)`.
#[derive(Debug, Clone)]
pub struct HankelEstimate {
    pub h_lambda: DMatrix<f64>,
    pub h_sigma: Vec<DMatrix<f64>>,
    pub num_actions: usize,
    pub num_obs: usize,
}

/// Converts episodes into prefix-labeled examples: one example per prefix
/// length `t = 0..L-1`, labeled with the reward of step `t+1` (the reward
/// received on the step taken right after the prefix). The full-length
/// prefix is not emitted — its label would need a step beyond the episode.
pub fn extract_examples(episodes: &[Episode]) -> Dataset {
    let mut examples = Vec::new();
    for episode in episodes {
        let syms = episode.symbols();
        for t in 0..episode.steps.len() {
            examples.push(LabeledExample {
                prefix: syms[..t].to_vec(),
                label: episode.steps[t].reward,
            });
        }
    }
    Dataset::from_examples(examples)
}

/// Selects a basis from data: the empty word first, then the most frequent
/// prefixes (resp. suffixes) of the example strings with length from 1 to
/// `max_len`, ties broken lexicographically by symbol ids.
pub fn select_basis(
    data: &Dataset,
    max_prefixes: usize,
    max_suffixes: usize,
    max_len: usize,
) -> Basis {
    let count_side = |extract: &dyn Fn(&[Symbol], usize) -> Vec<Symbol>, cap: usize| {
        let mut counts: HashMap<Vec<Symbol>, u64> = HashMap::new();
        for example in &data.examples {
            let len = example.prefix.len();
            for t in 1..=len.min(max_len) {
                *counts.entry(extract(&example.prefix, t)).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(Vec<Symbol>, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut side = vec![Vec::new()];
        side.extend(ranked.into_iter().take(cap.saturating_sub(1)).map(|(w, _)| w));
        side
    };
    let prefixes = count_side(&|s, t| s[..t].to_vec(), max_prefixes);
    let suffixes = count_side(&|s, t| s[s.len() - t..].to_vec(), max_suffixes);
    Basis { prefixes, suffixes }
}

/// Per-length-normalized empirical Hankel blocks.
///
/// Cell `(u, v)` is the sum of labels over examples whose string equals
/// `u·v`, divided by the number of examples of that length; lengths with no
/// examples give zero cells. This is the sample mean of `1[x = uv]·y`, an
/// unbiased estimate of `g(uv)`.
pub fn estimate_hankel(
    data: &Dataset,
    basis: &Basis,
    num_actions: usize,
    num_obs: usize,
) -> HankelEstimate {
    let np = basis.prefixes.len();
    let ns = basis.suffixes.len();
    let max_u = basis.prefixes.iter().map(Vec::len).max().unwrap_or(0);
    let max_v = basis.suffixes.iter().map(Vec::len).max().unwrap_or(0);
    let max_cell_len = max_u + 1 + max_v;

    // Label sums keyed by example string; only lengths a cell can reach.
    let mut sums: HashMap<&[Symbol], f64> = HashMap::new();
    for example in &data.examples {
        if example.prefix.len() <= max_cell_len {
            *sums.entry(example.prefix.as_slice()).or_insert(0.0) += example.label;
        }
    }

    let mut key: Vec<Symbol> = Vec::with_capacity(max_cell_len);
    let mut cell = |u: &[Symbol], mid: Option<Symbol>, v: &[Symbol]| -> f64 {
        key.clear();
        key.extend_from_slice(u);
        key.extend(mid);
        key.extend_from_slice(v);
        let count = data.count_for_len(key.len());
        if count == 0 {
            return 0.0;
        }
        sums.get(key.as_slice()).copied().unwrap_or(0.0) / count as f64
    };

    let h_lambda = DMatrix::from_fn(np, ns, |i, j| {
        cell(&basis.prefixes[i], None, &basis.suffixes[j])
    });
    let h_sigma = symbols(num_actions, num_obs)
        .into_iter()
        .map(|sym| {
            DMatrix::from_fn(np, ns, |i, j| {
                cell(&basis.prefixes[i], Some(sym), &basis.suffixes[j])
            })
        })
        .collect();
    HankelEstimate {
        h_lambda,
        h_sigma,
        num_actions,
        num_obs,
    }
}

/// Scales the rows of `uᵀ · block` by the inverted singular values:
/// `diag(d)⁻¹ uᵀ block`, the pseudo-inverse application shared by the plain
/// and compressed recovery paths.
pub(crate) fn apply_pinv(u: &DMatrix<f64>, d: &DVector<f64>, block: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = u.tr_mul(block);
    for (i, &s) in d.iter().enumerate() {
        let inv = 1.0 / s;
        out.row_mut(i).scale_mut(inv);
    }
    out
}

/// Recovers a rank-k WFA from estimated Hankel blocks.
///
/// With `H_lambda ≈ U D Vᵀ`: initial weights are the empty-word row of
/// `U D`, terminal weights the empty-word row of `V`, and each transition is
/// `diag(D)⁻¹ Uᵀ H_sigma V`. Fails when fewer than `k` singular values sit
/// above the relative floor (carrying the spectrum so the caller can lower
/// the rank). The result is basis-equivalent to the target, not
/// parameter-equal: only function values are comparable.
pub fn recover_wfa(estimate: &HankelEstimate, k: usize) -> Result<Wfa> {
    recover_wfa_detailed(estimate, k).map(|(wfa, _)| wfa)
}

/// [`recover_wfa`] plus the full singular-value spectrum of `H_lambda`.
pub fn recover_wfa_detailed(estimate: &HankelEstimate, k: usize) -> Result<(Wfa, Vec<f64>)> {
    let svd = truncated_svd(&estimate.h_lambda, k)?;
    if svd.effective_rank < k {
        return Err(Error::RankDeficient {
            requested: k,
            effective: svd.effective_rank,
            singular_values: svd.all_singular_values.clone(),
        });
    }
    let alpha = DVector::from_fn(k, |j, _| svd.u[(0, j)] * svd.singular_values[j]);
    let omega = svd.v.row(0).transpose();
    let transitions = estimate
        .h_sigma
        .iter()
        .map(|h| apply_pinv(&svd.u, &svd.singular_values, h) * &svd.v)
        .collect();
    let wfa = Wfa::new(
        estimate.num_actions,
        estimate.num_obs,
        alpha,
        transitions,
        omega,
    )?;
    Ok((wfa, svd.all_singular_values))
}

/// Synthetic infinite-data dataset: one example per string up to `max_len`,
/// labeled `g(x) · N_len` so that the per-length normalization cancels and
/// every Hankel cell reachable within `max_len` equals `g` exactly.
///
/// The `g` values come from a direct belief recursion on the model tensors
/// (the regrouped form of exhaustive path enumeration), so the fixture does
/// not depend on any WFA code path.
pub fn analytic_dataset(model: &Pomdp, policy: &StatePolicy, max_len: usize) -> Result<Dataset> {
    let report = validate(model);
    if !report.is_ok() {
        return Err(Error::InvalidModel(report.to_string()));
    }
    let sigma = symbols(model.num_actions, model.num_obs);
    let q = policy.expected_reward(model);
    let per_len: Vec<f64> = (0..=max_len)
        .map(|t| (sigma.len() as f64).powi(t as i32))
        .collect();

    let mut examples = Vec::new();
    // Depth-first over strings, propagating the unnormalized joint belief.
    let mut stack: Vec<(Vec<Symbol>, Vec<f64>)> = vec![(Vec::new(), model.initial.clone())];
    while let Some((word, belief)) = stack.pop() {
        let g: f64 = belief.iter().zip(&q).map(|(b, r)| b * r).sum();
        examples.push(LabeledExample {
            label: g * per_len[word.len()],
            prefix: word.clone(),
        });
        if word.len() == max_len {
            continue;
        }
        for &sym in &sigma {
            let mut next = vec![0.0; model.num_states];
            for (s, &mass) in belief.iter().enumerate() {
                let scaled = mass * policy.prob(s, sym.action);
                if scaled == 0.0 {
                    continue;
                }
                for (s2, slot) in next.iter_mut().enumerate() {
                    *slot +=
                        scaled * model.t(s, sym.action, s2) * model.z(s2, sym.action, sym.observation);
                }
            }
            let mut extended = word.clone();
            extended.push(sym);
            stack.push((extended, next));
        }
    }
    Ok(Dataset::from_examples(examples))
}

/// Basis size limits for [`select_basis`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BasisConfig {
    pub max_prefixes: usize,
    pub max_suffixes: usize,
    pub max_len: usize,
}

/// Projection family for the compressed path. `Identity` maps basis
/// sequences to one-hot rows (so the compressed path reduces exactly to the
/// plain one); it exists for verification, `Gaussian` is the working choice.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionKind {
    #[default]
    Gaussian,
    Identity,
}

/// Random-projection dimensions and seed for the compressed path.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CompressedConfig {
    pub d_u: usize,
    pub d_v: usize,
    pub seed: u64,
    #[serde(default)]
    pub projection: ProjectionKind,
}

/// End-to-end learning configuration.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LearnConfig {
    pub basis: BasisConfig,
    pub rank: usize,
    pub gamma: f64,
    /// `None` runs the plain (explicit-Hankel) path.
    pub compressed: Option<CompressedConfig>,
}

impl LearnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.basis.max_prefixes == 0 || self.basis.max_suffixes == 0 {
            return Err(Error::InvalidConfig(
                "basis limits must be at least 1".into(),
            ));
        }
        if self.rank == 0 {
            return Err(Error::InvalidConfig("rank must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma = {} outside [0, 1)",
                self.gamma
            )));
        }
        if let Some(c) = &self.compressed {
            if c.d_u == 0 || c.d_v == 0 {
                return Err(Error::InvalidConfig(
                    "projection dimensions must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Diagnostics of one learning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnReport {
    pub examples: usize,
    pub basis_prefixes: usize,
    pub basis_suffixes: usize,
    /// Spectrum of the factorized block (full, nonincreasing).
    pub singular_values: Vec<f64>,
    pub rank_used: usize,
    /// `rho(gamma · Σ_sigma B_sigma)` of the recovered automaton.
    pub spectral_radius: f64,
}

/// The learned UQF automaton plus its learning report.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub uqf: Wfa,
    pub report: LearnReport,
}

/// Full pipeline: examples → basis → Hankel estimate (plain or compressed)
/// → WFA recovery → Neumann conversion to the UQF automaton.
pub fn learn_uqf(
    episodes: &[Episode],
    num_actions: usize,
    num_obs: usize,
    config: &LearnConfig,
) -> Result<LearnOutcome> {
    let data = extract_examples(episodes);
    learn_uqf_from_dataset(&data, num_actions, num_obs, config)
}

/// [`learn_uqf`] starting from an already extracted dataset.
pub fn learn_uqf_from_dataset(
    data: &Dataset,
    num_actions: usize,
    num_obs: usize,
    config: &LearnConfig,
) -> Result<LearnOutcome> {
    config.validate()?;
    let basis = select_basis(
        data,
        config.basis.max_prefixes,
        config.basis.max_suffixes,
        config.basis.max_len,
    );
    let (reward_wfa, singular_values) = match &config.compressed {
        None => {
            let estimate = estimate_hankel(data, &basis, num_actions, num_obs);
            recover_wfa_detailed(&estimate, config.rank)?
        }
        Some(c) => {
            let (proj_u, proj_v) = match c.projection {
                ProjectionKind::Gaussian => (
                    JlProjection::gaussian(c.d_u, crate::rng::splitmix64(c.seed, 0)),
                    JlProjection::gaussian(c.d_v, crate::rng::splitmix64(c.seed, 1)),
                ),
                ProjectionKind::Identity => (
                    JlProjection::identity_over(&basis.prefixes),
                    JlProjection::identity_over(&basis.suffixes),
                ),
            };
            let sketch =
                compressed_estimate(data, &basis, &proj_u, &proj_v, num_actions, num_obs)?;
            recover_wfa_compressed_detailed(&sketch, &basis, &proj_u, config.rank)?
        }
    };
    let rho = spectral_radius(&(reward_wfa.symbol_sum() * config.gamma))?;
    let uqf = reward_wfa.to_uqf(config.gamma)?;
    Ok(LearnOutcome {
        uqf,
        report: LearnReport {
            examples: data.examples.len(),
            basis_prefixes: basis.prefixes.len(),
            basis_suffixes: basis.suffixes.len(),
            singular_values,
            rank_used: config.rank,
            spectral_radius: rho,
        },
    })
}
