//! The five subcommand implementations.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use uqf_core::io::{
    self, episodes_alphabet_ok, manifest_path, ModelFile, SampleManifest, SamplingSpec, WfaFile,
};
use uqf_core::planner::{
    epsilon_greedy, evaluate_policy, EvalStats, EvalTarget, GreedyPolicy, HistoryPolicy,
};
use uqf_core::pomdp::{mdp_optimal, sample_episodes, StatePolicy};
use uqf_core::rng::splitmix64;
use uqf_core::spectral::{learn_uqf, LearnReport};
use uqf_core::wfa::Wfa;
use uqf_core::Error;

use crate::config::{Baseline, ExperimentConfig};
use crate::envref::{resolve, EnvParams, ResolvedEnv};
use crate::{CliError, CliResult};

fn classify(err: Error) -> CliError {
    match err {
        Error::Io(_) | Error::Json(_) => CliError::io(err),
        Error::InvalidConfig(_) | Error::InvalidGrid(_) | Error::InvalidModel(_) => {
            CliError::config(err)
        }
        other => CliError::learning(other),
    }
}

/// `uqf sample`: uniform-policy episodes to JSON-lines plus a manifest.
pub fn sample(
    env: &ResolvedEnv,
    out: &Path,
    count: usize,
    length: usize,
    seed: u64,
) -> CliResult<()> {
    let model = &env.model;
    let uniform = StatePolicy::uniform(model.num_states, model.num_actions);
    let episodes =
        sample_episodes(model, &uniform, count, length, seed).map_err(classify)?;
    io::write_episodes(out, &episodes).map_err(CliError::io)?;
    io::write_manifest(
        out,
        &SampleManifest {
            seed,
            env_hash: env.hash.clone(),
            count,
            length,
            num_actions: model.num_actions,
            num_obs: model.num_obs,
        },
    )
    .map_err(CliError::io)?;
    println!(
        "wrote {count} episodes of length {length} to {} (manifest {})",
        out.display(),
        manifest_path(out).display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct LearnReportFile {
    #[serde(flatten)]
    report: LearnReport,
    wall_clock_secs: f64,
}

/// `uqf learn`: episodes file → UQF model file + learning report.
pub fn learn(
    env: &ResolvedEnv,
    config_path: &Path,
    episodes_path: &Path,
    out: &Path,
    report_path: Option<&Path>,
) -> CliResult<()> {
    let config = io::read_learn_config(config_path).map_err(|e| {
        CliError::config(format!("learn config {config_path:?}: {e}"))
    })?;
    let episodes = io::read_episodes(episodes_path).map_err(CliError::io)?;
    let model = &env.model;
    if !episodes_alphabet_ok(&episodes, model.num_actions, model.num_obs) {
        return Err(CliError::config(format!(
            "episodes in {episodes_path:?} fall outside the {} x {} alphabet of env {}",
            model.num_actions, model.num_obs, env.label
        )));
    }
    let start = std::time::Instant::now();
    let outcome =
        learn_uqf(&episodes, model.num_actions, model.num_obs, &config).map_err(classify)?;
    let wall_clock_secs = start.elapsed().as_secs_f64();

    io::write_model(
        out,
        &ModelFile {
            wfa: WfaFile::from(&outcome.uqf),
            gamma: config.gamma,
            sampling: SamplingSpec::Uniform,
            env_hash: env.hash.clone(),
        },
    )
    .map_err(CliError::io)?;

    let report = LearnReportFile {
        report: outcome.report,
        wall_clock_secs,
    };
    let text = serde_json::to_string_pretty(&report).map_err(CliError::io)?;
    if let Some(path) = report_path {
        std::fs::write(path, text.clone() + "\n").map_err(CliError::io)?;
    }
    println!("{text}");
    Ok(())
}

/// What `eval` should score.
pub enum EvalSubject {
    Model(std::path::PathBuf),
    Baseline(Baseline),
}

/// Appends a row to the metrics CSV, writing the header once per file.
fn append_csv_row(path: &Path, header: &str, row: &str) -> CliResult<()> {
    let needs_header = !path.exists();
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(CliError::io)?;
    if needs_header {
        writeln!(file, "{header}").map_err(CliError::io)?;
    }
    writeln!(file, "{row}").map_err(CliError::io)?;
    Ok(())
}

fn greedy_from_model(file: &ModelFile) -> CliResult<GreedyPolicy> {
    let wfa: Wfa = file.wfa.clone().try_into().map_err(classify)?;
    let divisor = match file.sampling {
        SamplingSpec::Uniform => HistoryPolicy::uniform(wfa.num_actions()),
    };
    Ok(GreedyPolicy::new(wfa, divisor))
}

fn eval_greedy(
    env: &ResolvedEnv,
    policy: GreedyPolicy,
    episodes: usize,
    max_len: usize,
    gamma: f64,
    seed: u64,
) -> CliResult<EvalStats> {
    let wrapped = epsilon_greedy(policy, 0.0).map_err(classify)?;
    evaluate_policy(
        &env.model,
        EvalTarget::History(&wrapped),
        episodes,
        max_len,
        gamma,
        seed,
    )
    .map_err(classify)
}

fn eval_baseline(
    env: &ResolvedEnv,
    baseline: Baseline,
    episodes: usize,
    max_len: usize,
    gamma: f64,
    seed: u64,
) -> CliResult<EvalStats> {
    match baseline {
        Baseline::Random => evaluate_policy(
            &env.model,
            EvalTarget::History(&HistoryPolicy::uniform(env.model.num_actions)),
            episodes,
            max_len,
            gamma,
            seed,
        )
        .map_err(classify),
        Baseline::Optimal => {
            let (_, actions) = mdp_optimal(&env.model).map_err(classify)?;
            let policy = StatePolicy::deterministic(&actions, env.model.num_actions);
            evaluate_policy(
                &env.model,
                EvalTarget::State(&policy),
                episodes,
                max_len,
                gamma,
                seed,
            )
            .map_err(classify)
        }
    }
}

pub const EVAL_CSV_HEADER: &str = "env,train_size,seed,mean_return,stderr";

/// `uqf eval`: score a model file or a baseline policy, append a CSV row.
#[allow(clippy::too_many_arguments)]
pub fn eval(
    env: &ResolvedEnv,
    subject: EvalSubject,
    out: &Path,
    episodes: usize,
    max_len: usize,
    gamma: f64,
    seed: u64,
    train_size: usize,
) -> CliResult<()> {
    let stats = match &subject {
        EvalSubject::Model(path) => {
            let file = io::read_model(path).map_err(CliError::io)?;
            if file.env_hash != env.hash {
                return Err(CliError::config(format!(
                    "model {path:?} was trained on env hash {}, but {} has hash {}",
                    file.env_hash, env.label, env.hash
                )));
            }
            eval_greedy(env, greedy_from_model(&file)?, episodes, max_len, gamma, seed)?
        }
        EvalSubject::Baseline(b) => eval_baseline(env, *b, episodes, max_len, gamma, seed)?,
    };
    let row = format!(
        "{},{},{},{},{}",
        env.label, train_size, seed, stats.mean_return, stats.stderr
    );
    append_csv_row(out, EVAL_CSV_HEADER, &row)?;
    println!("{row}");
    Ok(())
}

pub const CURVE_CSV_HEADER: &str = "env,method,train_size,seed,mean_return,stderr,note";

/// One learning-curve cell: sample uniformly, learn, evaluate the greedy
/// policy. Returns the stats or the error note.
fn curve_cell(
    env: &ResolvedEnv,
    config: &ExperimentConfig,
    size: usize,
    seed: u64,
) -> Result<EvalStats, String> {
    let model = &env.model;
    let uniform = StatePolicy::uniform(model.num_states, model.num_actions);
    let sample_seed = splitmix64(seed, 2 * size as u64);
    let eval_seed = splitmix64(seed, 2 * size as u64 + 1);
    let episodes = sample_episodes(model, &uniform, size, config.train_len, sample_seed)
        .map_err(|e| e.to_string())?;
    let learn_config = config.learn.clone().into();
    let outcome = learn_uqf(&episodes, model.num_actions, model.num_obs, &learn_config)
        .map_err(|e| e.to_string())?;
    let policy = GreedyPolicy::new(outcome.uqf, HistoryPolicy::uniform(model.num_actions));
    let wrapped = epsilon_greedy(policy, 0.0).map_err(|e| e.to_string())?;
    evaluate_policy(
        model,
        EvalTarget::History(&wrapped),
        config.eval.episodes,
        config.eval.max_len,
        config.eval.gamma,
        eval_seed,
    )
    .map_err(|e| e.to_string())
}

/// `uqf curve`: baseline rows plus one row per (size, seed) cell; failed
/// cells keep their row with an error note and the sweep continues.
pub fn curve(config: &ExperimentConfig, out_dir: &Path) -> CliResult<()> {
    let env = resolve(
        &config.env,
        EnvParams {
            slip: config.slip,
            step_reward: config.step_reward,
            goal_reward: config.goal_reward,
        },
    )?;
    std::fs::create_dir_all(out_dir).map_err(CliError::io)?;
    let csv_path = out_dir.join("curve.csv");
    let mut rows = vec![CURVE_CSV_HEADER.to_string()];

    for &baseline in &config.baselines {
        for &seed in &config.seeds {
            let eval_seed = splitmix64(seed, baseline as u64);
            let stats = eval_baseline(
                &env,
                baseline,
                config.eval.episodes,
                config.eval.max_len,
                config.eval.gamma,
                eval_seed,
            )?;
            rows.push(format!(
                "{},{},0,{},{},{},",
                env.label,
                baseline.label(),
                seed,
                stats.mean_return,
                stats.stderr
            ));
        }
    }

    for &size in &config.sizes {
        for &seed in &config.seeds {
            let row = match curve_cell(&env, config, size, seed) {
                Ok(stats) => format!(
                    "{},uqf,{},{},{},{},",
                    env.label, size, seed, stats.mean_return, stats.stderr
                ),
                Err(note) => {
                    eprintln!("cell (size={size}, seed={seed}) failed: {note}");
                    format!(
                        "{},uqf,{},{},,,\"{}\"",
                        env.label,
                        size,
                        seed,
                        note.replace('"', "'")
                    )
                }
            };
            rows.push(row);
        }
    }

    std::fs::write(&csv_path, rows.join("\n") + "\n").map_err(CliError::io)?;
    println!("wrote {}", csv_path.display());
    Ok(())
}

/// `uqf selfcheck`: run the oracle equivalence suite; nonzero exit on any
/// failure.
pub fn selfcheck() -> CliResult<()> {
    let results = uqf_core::selfcheck::run_all().map_err(classify)?;
    let mut failed = false;
    for result in &results {
        println!("{result}");
        failed |= !result.passed();
    }
    if failed {
        Err(CliError::learning("selfcheck failed"))
    } else {
        println!("all {} checks passed", results.len());
        Ok(())
    }
}
