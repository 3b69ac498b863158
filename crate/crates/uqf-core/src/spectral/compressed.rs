//! Single-pass compressed Hankel estimation via random projections.
//!
//! Instead of materializing the `|U| x |V|` Hankel blocks, each example
//! contributes rank-one updates `y · phi_U(u) ⊗ phi_V(v)` for every split of
//! its prefix, against Gaussian projection rows generated lazily per
//! sequence. Recovery then runs on the `d_U x d_V` sketch. With identity
//! projections the sketch equals the explicit Hankel estimate exactly, which
//! is the standing cross-check between the two paths.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::alphabet::{word_hash, Symbol};
use crate::error::{Error, Result};
use crate::rng::splitmix64;
use crate::spectral::{apply_pinv, truncated_svd, Basis, Dataset};
use crate::wfa::Wfa;

/// A Johnson–Lindenstrauss projection over symbol sequences.
///
/// Gaussian rows have i.i.d. `N(0, 1/d)` entries and are generated lazily:
/// the row of a sequence is keyed by its stable 64-bit FNV-1a hash
/// ([`word_hash`]), so rows are reproducible across runs and platforms from
/// the seed alone and injective over any realistic sequence universe.
/// The basis-indexed variant maps the i-th basis sequence to the i-th
/// standard basis vector, reducing the compressed path to the plain one.
#[derive(Debug, Clone)]
pub struct JlProjection {
    d: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Gaussian { seed: u64 },
    BasisIndexed { index: HashMap<Vec<Symbol>, usize> },
}

impl JlProjection {
    /// Gaussian projection into `d` dimensions.
    pub fn gaussian(d: usize, seed: u64) -> Self {
        JlProjection {
            d,
            kind: Kind::Gaussian { seed },
        }
    }

    /// Identity "projection" over an explicit sequence list: sequence `i`
    /// maps to one-hot row `e_i` of dimension `len(sequences)`.
    pub fn identity_over(sequences: &[Vec<Symbol>]) -> Self {
        JlProjection {
            d: sequences.len(),
            kind: Kind::BasisIndexed {
                index: sequences
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.clone(), i))
                    .collect(),
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Stable row id of a sequence.
    pub fn row_id(&self, word: &[Symbol]) -> u64 {
        match &self.kind {
            Kind::Gaussian { .. } => word_hash(word),
            Kind::BasisIndexed { index } => index.get(word).map(|&i| i as u64).unwrap_or(u64::MAX),
        }
    }

    /// The projection row of a sequence.
    pub fn row(&self, word: &[Symbol]) -> DVector<f64> {
        match &self.kind {
            Kind::Gaussian { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(*seed, word_hash(word)));
                let scale = 1.0 / (self.d as f64).sqrt();
                DVector::from_fn(self.d, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z * scale
                })
            }
            Kind::BasisIndexed { index } => {
                let mut row = DVector::zeros(self.d);
                if let Some(&i) = index.get(word) {
                    row[i] = 1.0;
                }
                row
            }
        }
    }

    /// The materialized projection matrix over an ordered basis side
    /// (`len(side) x d`), row `i` being the row of the i-th sequence.
    pub fn materialize(&self, side: &[Vec<Symbol>]) -> DMatrix<f64> {
        let rows: Vec<DVector<f64>> = side.iter().map(|w| self.row(w)).collect();
        DMatrix::from_fn(side.len(), self.d, |i, j| rows[i][j])
    }
}

/// Sketched Hankel statistics: `c_u ≈ Phi_Uᵀ g(U)`, `c_uv ≈ Phi_Uᵀ H
/// Phi_V`, `c_sigma[id] ≈ Phi_Uᵀ H_sigma Phi_V`.
#[derive(Debug, Clone)]
pub struct CompressedSketch {
    pub c_u: DVector<f64>,
    pub c_uv: DMatrix<f64>,
    pub c_sigma: Vec<DMatrix<f64>>,
    pub num_actions: usize,
    pub num_obs: usize,
}

/// Single pass over the dataset accumulating the compressed statistics.
///
/// Every split of an example's prefix into `(u, v)` — and `(u, sigma, v)` —
/// with both parts in the selected basis contributes its label times the
/// outer product of the projection rows; labels carry the same per-length
/// normalization as the explicit Hankel estimate. Examples whose full
/// prefix is a basis prefix also contribute to `c_u`, the sketched
/// empty-suffix column used to recover the terminal weights.
pub fn compressed_estimate(
    data: &Dataset,
    basis: &Basis,
    proj_u: &JlProjection,
    proj_v: &JlProjection,
    num_actions: usize,
    num_obs: usize,
) -> Result<CompressedSketch> {
    let prefix_index = Basis::index(&basis.prefixes);
    let suffix_index = Basis::index(&basis.suffixes);
    let phi_u: Vec<DVector<f64>> = basis.prefixes.iter().map(|w| proj_u.row(w)).collect();
    let phi_v: Vec<DVector<f64>> = basis.suffixes.iter().map(|w| proj_v.row(w)).collect();

    let mut c_u = DVector::zeros(proj_u.dim());
    let mut c_uv = DMatrix::zeros(proj_u.dim(), proj_v.dim());
    let mut c_sigma = vec![DMatrix::zeros(proj_u.dim(), proj_v.dim()); num_actions * num_obs];

    for example in &data.examples {
        let x = example.prefix.as_slice();
        let count = data.count_for_len(x.len());
        if count == 0 {
            continue;
        }
        let y = example.label / count as f64;
        if let Some(&i) = prefix_index.get(x) {
            c_u.axpy(y, &phi_u[i], 1.0);
        }
        for split in 0..=x.len() {
            if let (Some(&i), Some(&j)) = (
                prefix_index.get(&x[..split]),
                suffix_index.get(&x[split..]),
            ) {
                c_uv.ger(y, &phi_u[i], &phi_v[j], 1.0);
            }
        }
        for split in 0..x.len() {
            if let (Some(&i), Some(&j)) = (
                prefix_index.get(&x[..split]),
                suffix_index.get(&x[split + 1..]),
            ) {
                let sigma = x[split].id(num_obs);
                c_sigma[sigma].ger(y, &phi_u[i], &phi_v[j], 1.0);
            }
        }
    }
    Ok(CompressedSketch {
        c_u,
        c_uv,
        c_sigma,
        num_actions,
        num_obs,
    })
}

/// Recovers a rank-k WFA from a compressed sketch.
pub fn recover_wfa_compressed(
    sketch: &CompressedSketch,
    basis: &Basis,
    proj_u: &JlProjection,
    k: usize,
) -> Result<Wfa> {
    recover_wfa_compressed_detailed(sketch, basis, proj_u, k).map(|(wfa, _)| wfa)
}

/// With `C_UV ≈ U D Vᵀ`: the initial weights are `eᵀ U D` where `e` solves
/// `Phi_U e = e_lambda` in least squares over the materialized basis rows,
/// the terminal weights are `diag(D)⁻¹ Uᵀ c_u`, and each transition is
/// `diag(D)⁻¹ Uᵀ C_sigma V`. Also returns the sketch spectrum.
pub fn recover_wfa_compressed_detailed(
    sketch: &CompressedSketch,
    basis: &Basis,
    proj_u: &JlProjection,
    k: usize,
) -> Result<(Wfa, Vec<f64>)> {
    let svd = truncated_svd(&sketch.c_uv, k)?;
    if svd.effective_rank < k {
        return Err(Error::RankDeficient {
            requested: k,
            effective: svd.effective_rank,
            singular_values: svd.all_singular_values.clone(),
        });
    }
    let phi_u_mat = proj_u.materialize(&basis.prefixes);
    let mut e_lambda = DVector::zeros(basis.prefixes.len());
    e_lambda[0] = 1.0;
    let phi_svd = phi_u_mat.clone().svd(true, true);
    let eps = crate::spectral::SV_RELATIVE_FLOOR
        * phi_svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let e = phi_svd
        .solve(&e_lambda, eps)
        .map_err(|_| Error::SingularSystem)?;

    // alpha = (U D)ᵀ e, scaled per column by the singular values.
    let mut alpha = svd.u.tr_mul(&e);
    for (j, &s) in svd.singular_values.iter().enumerate() {
        alpha[j] *= s;
    }
    // omega = diag(D)⁻¹ Uᵀ c_u.
    let mut omega = svd.u.tr_mul(&sketch.c_u);
    for (j, &s) in svd.singular_values.iter().enumerate() {
        omega[j] /= s;
    }
    let transitions = sketch
        .c_sigma
        .iter()
        .map(|c| apply_pinv(&svd.u, &svd.singular_values, c) * &svd.v)
        .collect();
    let wfa = Wfa::new(
        sketch.num_actions,
        sketch.num_obs,
        alpha,
        transitions,
        omega,
    )?;
    Ok((wfa, svd.all_singular_values))
}
