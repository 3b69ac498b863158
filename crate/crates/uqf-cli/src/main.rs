//! `uqf` — learn and plan in partially observable environments with
//! spectrally learned unnormalized Q functions.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use uqf_cli::commands::{self, EvalSubject};
use uqf_cli::config::{Baseline, ExperimentConfig};
use uqf_cli::envref::{resolve, EnvParams};
use uqf_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "uqf",
    version,
    about = "Spectral learning and planning for POMDPs via unnormalized Q functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct EnvArgs {
    /// Environment: builtin:A, builtin:B, builtin:C, or a layout file path.
    #[arg(long)]
    env: String,
    /// Probability that an action is replaced by a random one.
    #[arg(long, default_value_t = uqf_core::envs::BUILTIN_SLIP)]
    slip: f64,
    /// Reward of every non-goal step.
    #[arg(long, default_value_t = 0.0)]
    step_reward: f64,
    /// Reward collected when acting from the goal cell.
    #[arg(long, default_value_t = 1.0)]
    goal_reward: f64,
}

impl EnvArgs {
    fn resolve(&self) -> CliResult<uqf_cli::envref::ResolvedEnv> {
        resolve(
            &self.env,
            EnvParams {
                slip: self.slip,
                step_reward: self.step_reward,
                goal_reward: self.goal_reward,
            },
        )
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Random,
    Optimal,
}

impl From<BaselineArg> for Baseline {
    fn from(b: BaselineArg) -> Baseline {
        match b {
            BaselineArg::Random => Baseline::Random,
            BaselineArg::Optimal => Baseline::Optimal,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample uniform-policy episodes to a JSON-lines file (plus manifest).
    Sample {
        #[command(flatten)]
        env: EnvArgs,
        /// Output episodes file (.jsonl).
        #[arg(long)]
        out: PathBuf,
        /// Number of episodes.
        #[arg(long)]
        count: usize,
        /// Steps per episode.
        #[arg(long)]
        len: usize,
        /// Sampling seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Learn a UQF model from an episodes file.
    Learn {
        #[command(flatten)]
        env: EnvArgs,
        /// Learning config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Episodes file produced by `sample`.
        #[arg(long)]
        episodes: PathBuf,
        /// Output model file (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional report file; the report always prints to stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a model or a baseline policy; append a CSV row.
    Eval {
        #[command(flatten)]
        env: EnvArgs,
        /// Model file to evaluate (omit when using --baseline).
        #[arg(long, conflicts_with = "baseline")]
        model: Option<PathBuf>,
        /// Baseline policy to evaluate instead of a model.
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
        /// Metrics CSV to append to.
        #[arg(long)]
        out: PathBuf,
        /// Evaluation episodes.
        #[arg(long, default_value_t = 1000)]
        eval_episodes: usize,
        /// Maximum episode length.
        #[arg(long, default_value_t = 100)]
        max_len: usize,
        /// Evaluation discount factor.
        #[arg(long, default_value_t = 0.99)]
        gamma_eval: f64,
        /// Evaluation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Training-set size recorded in the CSV row (0 for baselines).
        #[arg(long, default_value_t = 0)]
        train_size: usize,
    },
    /// Run a size x seed learning-curve sweep from an experiment config.
    Curve {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for curve.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in oracle equivalence checks.
    Selfcheck,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sample {
            env,
            out,
            count,
            len,
            seed,
        } => {
            let resolved = env.resolve()?;
            commands::sample(&resolved, &out, count, len, seed)
        }
        Command::Learn {
            env,
            config,
            episodes,
            out,
            report,
        } => {
            let resolved = env.resolve()?;
            commands::learn(&resolved, &config, &episodes, &out, report.as_deref())
        }
        Command::Eval {
            env,
            model,
            baseline,
            out,
            eval_episodes,
            max_len,
            gamma_eval,
            seed,
            train_size,
        } => {
            let resolved = env.resolve()?;
            let subject = match (model, baseline) {
                (Some(path), None) => EvalSubject::Model(path),
                (None, Some(b)) => EvalSubject::Baseline(b.into()),
                _ => {
                    return Err(CliError::config(
                        "exactly one of --model or --baseline is required",
                    ))
                }
            };
            commands::eval(
                &resolved,
                subject,
                &out,
                eval_episodes,
                max_len,
                gamma_eval,
                seed,
                train_size,
            )
        }
        Command::Curve { config, out } => {
            let experiment = ExperimentConfig::load(&config)?;
            commands::curve(&experiment, &out)
        }
        Command::Selfcheck => commands::selfcheck(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.kind.code() as u8)
        }
    }
}
