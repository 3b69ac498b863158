//! Environment references: `builtin:A` / `builtin:B` / `builtin:C`, a
//! plain-text grid layout path, or a POMDP JSON document (`.json`).

use std::path::Path;

use uqf_core::envs::{builtin_gridworld, compile_gridworld, GridSpec};
use uqf_core::io::{pomdp_hash, read_pomdp};
use uqf_core::pomdp::{validate, Pomdp};

use crate::{CliError, CliResult};

/// Grid parameters applied to layout environments (overriding the built-in
/// defaults when given). Ignored for POMDP JSON environments.
#[derive(Debug, Clone, Copy)]
pub struct EnvParams {
    pub slip: f64,
    pub step_reward: f64,
    pub goal_reward: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        EnvParams {
            slip: uqf_core::envs::BUILTIN_SLIP,
            step_reward: 0.0,
            goal_reward: 1.0,
        }
    }
}

/// A resolved environment: the compiled model and its content hash.
/// `spec` is present for grid environments only.
#[derive(Debug, Clone)]
pub struct ResolvedEnv {
    pub label: String,
    pub spec: Option<GridSpec>,
    pub model: Pomdp,
    pub hash: String,
}

/// Resolves an environment reference string.
pub fn resolve(reference: &str, params: EnvParams) -> CliResult<ResolvedEnv> {
    let (spec, model) = if let Some(name) = reference.strip_prefix("builtin:") {
        let mut spec = builtin_gridworld(name).map_err(CliError::config)?;
        spec.slip = params.slip;
        spec.step_reward = params.step_reward;
        spec.goal_reward = params.goal_reward;
        let model = compile_gridworld(&spec).map_err(CliError::config)?;
        (Some(spec), model)
    } else if reference.ends_with(".json") {
        let model = read_pomdp(Path::new(reference)).map_err(|e| {
            CliError::config(format!("cannot load POMDP env {reference:?}: {e}"))
        })?;
        let report = validate(&model);
        if !report.is_ok() {
            return Err(CliError::config(format!(
                "POMDP env {reference:?} is invalid:\n{report}"
            )));
        }
        (None, model)
    } else {
        let text = std::fs::read_to_string(Path::new(reference)).map_err(|e| {
            CliError::config(format!("cannot read env layout {reference:?}: {e}"))
        })?;
        let spec = GridSpec::parse(&text, params.slip, params.step_reward, params.goal_reward)
            .map_err(|e| CliError::config(format!("env layout {reference:?}: {e}")))?;
        let model = compile_gridworld(&spec).map_err(CliError::config)?;
        (Some(spec), model)
    };
    let hash = pomdp_hash(&model).map_err(CliError::io)?;
    Ok(ResolvedEnv {
        label: reference.to_string(),
        spec,
        model,
        hash,
    })
}
