//! The `curve` experiment configuration file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use uqf_core::io::LearnConfigFile;

use crate::{CliError, CliResult};

fn default_slip() -> f64 {
    uqf_core::envs::BUILTIN_SLIP
}

fn default_goal_reward() -> f64 {
    1.0
}

fn default_train_len() -> usize {
    30
}

fn default_eval_episodes() -> usize {
    1000
}

fn default_eval_max_len() -> usize {
    100
}

fn default_eval_gamma() -> f64 {
    0.99
}

fn default_baselines() -> Vec<Baseline> {
    vec![Baseline::Random, Baseline::Optimal]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    Random,
    Optimal,
}

impl Baseline {
    pub fn label(self) -> &'static str {
        match self {
            Baseline::Random => "random",
            Baseline::Optimal => "optimal",
        }
    }
}

/// Evaluation protocol: Monte-Carlo returns over `episodes` rollouts of at
/// most `max_len` steps, discounted by `gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSection {
    #[serde(default = "default_eval_episodes")]
    pub episodes: usize,
    #[serde(default = "default_eval_max_len")]
    pub max_len: usize,
    #[serde(default = "default_eval_gamma")]
    pub gamma: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            episodes: default_eval_episodes(),
            max_len: default_eval_max_len(),
            gamma: default_eval_gamma(),
        }
    }
}

/// A learning-curve sweep: for every (training size, seed) cell, sample
/// uniformly, learn a UQF model and evaluate its greedy policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Environment reference (`builtin:A` or a layout path).
    pub env: String,
    #[serde(default = "default_slip")]
    pub slip: f64,
    #[serde(default)]
    pub step_reward: f64,
    #[serde(default = "default_goal_reward")]
    pub goal_reward: f64,
    /// Training set sizes (episode counts), e.g. [100, 200, 400, 800].
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Length of each training episode.
    #[serde(default = "default_train_len")]
    pub train_len: usize,
    pub learn: LearnConfigFile,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default = "default_baselines")]
    pub baselines: Vec<Baseline>,
}

impl ExperimentConfig {
    /// The documented default sweep for the built-in grid worlds: sizes
    /// 100..800, five seeds, and the learning hyperparameters that proved
    /// robust across sizes (wide frequency basis, rank 4, gamma 0.6).
    pub fn gridworld_default(env: &str) -> Self {
        ExperimentConfig {
            env: env.to_string(),
            slip: default_slip(),
            step_reward: 0.0,
            goal_reward: 1.0,
            sizes: vec![100, 200, 400, 800],
            seeds: vec![0, 1, 2, 3, 4],
            train_len: default_train_len(),
            learn: LearnConfigFile {
                basis: uqf_core::spectral::BasisConfig {
                    max_prefixes: 120,
                    max_suffixes: 120,
                    max_len: 4,
                },
                rank: 4,
                gamma: 0.6,
                compressed: None,
            },
            eval: EvalSection::default(),
            baselines: default_baselines(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {path:?}: {e}")))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("malformed config {path:?}: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(CliError::config("sizes must be nonempty and positive"));
        }
        if self.seeds.is_empty() {
            return Err(CliError::config("seeds must be nonempty"));
        }
        if self.train_len == 0 {
            return Err(CliError::config("train_len must be positive"));
        }
        if !self.env.starts_with("builtin:") && !Path::new(&self.env).exists() {
            return Err(CliError::config(format!(
                "env layout {:?} does not exist",
                self.env
            )));
        }
        Ok(())
    }
}
