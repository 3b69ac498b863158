//! Truncated singular value decomposition used by the recovery steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below `SV_RELATIVE_FLOOR * sigma_max` count as zero when
/// pseudo-inverting and when measuring effective rank.
pub const SV_RELATIVE_FLOOR: f64 = 1e-12;

/// Rank-k factorization `m ≈ u · diag(singular_values) · vᵀ`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `rows x k`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// The k largest singular values, nonincreasing.
    pub singular_values: DVector<f64>,
    /// `cols x k`, orthonormal columns.
    pub v: DMatrix<f64>,
    /// Every singular value of the input, nonincreasing; lets callers see
    /// what was cut and lower the rank when the spectrum collapses early.
    pub all_singular_values: Vec<f64>,
    /// Number of kept singular values above `SV_RELATIVE_FLOOR * sigma_max`.
    pub effective_rank: usize,
}

/// Best rank-k approximation factors of `m`.
///
/// The truncation is optimal in the Frobenius sense (the factors come from a
/// full SVD); `u` and `v` have orthonormal columns to well below 1e-10.
pub fn truncated_svd(m: &DMatrix<f64>, k: usize) -> Result<TruncatedSvd> {
    let max_rank = m.nrows().min(m.ncols());
    if k > max_rank {
        return Err(Error::RankTooLarge {
            requested: k,
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let svd = m.clone().svd(true, true);
    let all: Vec<f64> = svd.singular_values.iter().copied().collect();
    debug_assert!(all.windows(2).all(|w| w[0] >= w[1]), "unsorted SVD");
    let u_full = svd.u.expect("u requested");
    let v_t_full = svd.v_t.expect("v_t requested");

    let u = u_full.columns(0, k).into_owned();
    let v = v_t_full.rows(0, k).transpose();
    let singular_values = DVector::from_iterator(k, all.iter().take(k).copied());

    let floor = SV_RELATIVE_FLOOR * all.first().copied().unwrap_or(0.0);
    let effective_rank = singular_values.iter().filter(|&&s| s > floor).count();

    debug_assert!(orthonormality_defect(&u) <= 1e-10);
    debug_assert!(orthonormality_defect(&v) <= 1e-10);

    Ok(TruncatedSvd {
        u,
        singular_values,
        v,
        all_singular_values: all,
        effective_rank,
    })
}

/// `max |columnsᵀ·columns − I|`; zero for perfectly orthonormal columns.
pub fn orthonormality_defect(columns: &DMatrix<f64>) -> f64 {
    let gram = columns.tr_mul(columns);
    let k = gram.nrows();
    let mut defect = 0.0_f64;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((gram[(i, j)] - target).abs());
        }
    }
    defect
}

impl TruncatedSvd {
    /// Reconstruction `u · diag(d) · vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.u * DMatrix::from_diagonal(&self.singular_values) * self.v.transpose()
    }
}
