//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or policy failed invariant validation.
    #[error("invalid model:\n{0}")]
    InvalidModel(String),

    /// A brute-force oracle would enumerate too many state paths.
    #[error("enumeration of {paths:.3e} state paths exceeds the {limit:.0e} guard")]
    EnumerationGuard { paths: f64, limit: f64 },

    /// The queried history has zero probability under the sampling policy.
    #[error("history has zero probability under the sampling policy")]
    ZeroProbabilityHistory,

    /// The sampling policy assigns (numerically) zero probability to an action.
    #[error("sampling probability for action {action} is below 1e-12")]
    ZeroSamplingProbability { action: usize },

    /// A symbol lies outside the automaton's alphabet.
    #[error("symbol (a={action}, o={observation}) outside alphabet ({num_actions} x {num_obs})")]
    SymbolOutOfRange {
        action: usize,
        observation: usize,
        num_actions: usize,
        num_obs: usize,
    },

    /// The Neumann series does not converge: rho(gamma * sum of transitions)
    /// is too close to (or above) one.
    #[error("spectral radius {rho} of the discounted transition sum is not below 1 - 1e-9")]
    SpectralRadiusTooLarge { rho: f64 },

    /// A linear system could not be solved to the required residual.
    #[error("linear system is singular or too ill-conditioned")]
    SingularSystem,

    /// Spectral radius requires a square matrix.
    #[error("matrix must be square, got {rows} x {cols}")]
    NonSquareMatrix { rows: usize, cols: usize },

    /// Requested SVD rank exceeds the matrix dimensions.
    #[error("rank {requested} exceeds min dimension of a {rows} x {cols} matrix")]
    RankTooLarge {
        requested: usize,
        rows: usize,
        cols: usize,
    },

    /// The estimated Hankel block does not support the requested rank.
    #[error(
        "effective rank {effective} is below the requested rank {requested}; \
         singular values: {singular_values:?}"
    )]
    RankDeficient {
        requested: usize,
        effective: usize,
        singular_values: Vec<f64>,
    },

    /// A WFA parameter is NaN or infinite.
    #[error("non-finite value in WFA parameters")]
    NonFinite,

    /// A grid layout failed validation.
    #[error("invalid grid layout: {0}")]
    InvalidGrid(String),

    /// A configuration file or value is unusable.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
