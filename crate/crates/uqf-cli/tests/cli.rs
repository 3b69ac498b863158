//! End-to-end tests of the `uqf` binary: file outputs, exit codes,
//! determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use uqf_core::io::{read_model, write_pomdp};
use uqf_core::planner::{GreedyPolicy, HistoryPolicy};
use uqf_core::pomdp::chain_model;
use uqf_core::wfa::Wfa;

fn uqf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_uqf"))
}

fn run(args: &[&str]) -> Output {
    uqf().args(args).output().expect("binary runs")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("uqf-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_chain_env(dir: &Path) -> PathBuf {
    let path = dir.join("chain.json");
    write_pomdp(&path, &chain_model(0.5)).unwrap();
    path
}

fn learn_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("learn.json");
    std::fs::write(&path, body).unwrap();
    path
}

const CHAIN_LEARN: &str = r#"{
  "basis": {"max_prefixes": 8, "max_suffixes": 8, "max_len": 2},
  "rank": 2,
  "gamma": 0.5
}"#;

#[test]
fn sample_writes_expected_lines_and_manifest() {
    let dir = workdir("sample");
    let out = dir.join("episodes.jsonl");
    let result = run(&[
        "sample",
        "--env",
        "builtin:A",
        "--out",
        out.to_str().unwrap(),
        "--count",
        "10",
        "--len",
        "5",
        "--seed",
        "3",
    ]);
    assert!(result.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 10);
    let manifest = std::fs::read_to_string(dir.join("episodes.jsonl.manifest.json")).unwrap();
    for key in ["seed", "env_hash", "count", "num_actions"] {
        assert!(manifest.contains(key), "manifest missing {key}");
    }
}

#[test]
fn sample_reruns_are_byte_identical() {
    let dir = workdir("sample-det");
    let args = |out: &Path| {
        vec![
            "sample".to_string(),
            "--env".into(),
            "builtin:B".into(),
            "--out".into(),
            out.to_string_lossy().into_owned(),
            "--count".into(),
            "25".into(),
            "--len".into(),
            "12".into(),
            "--seed".into(),
            "11".into(),
        ]
    };
    let a = dir.join("a.jsonl");
    let b = dir.join("b.jsonl");
    assert!(uqf().args(args(&a)).status().unwrap().success());
    assert!(uqf().args(args(&b)).status().unwrap().success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn corrupt_env_exits_with_config_error_naming_path() {
    let dir = workdir("badenv");
    let bad = dir.join("broken.txt");
    std::fs::write(&bad, "#####\n#S..#\n## missing goal\n#####\n").unwrap();
    let result = run(&[
        "sample",
        "--env",
        bad.to_str().unwrap(),
        "--out",
        dir.join("x.jsonl").to_str().unwrap(),
        "--count",
        "1",
        "--len",
        "1",
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("broken.txt"), "stderr: {stderr}");
}

#[test]
fn learn_on_chain_env_prefers_the_rewarding_action() {
    let dir = workdir("learn-chain");
    let env = write_chain_env(&dir);
    let episodes = dir.join("episodes.jsonl");
    assert!(run(&[
        "sample",
        "--env",
        env.to_str().unwrap(),
        "--out",
        episodes.to_str().unwrap(),
        "--count",
        "4000",
        "--len",
        "6",
        "--seed",
        "1",
    ])
    .status
    .success());

    let config = learn_config(&dir, CHAIN_LEARN);
    let model_path = dir.join("model.json");
    let result = run(&[
        "learn",
        "--env",
        env.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--episodes",
        episodes.to_str().unwrap(),
        "--out",
        model_path.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    for key in ["singular_values", "spectral_radius", "wall_clock_secs"] {
        assert!(stdout.contains(key), "report missing {key}: {stdout}");
    }

    let model = read_model(&model_path).unwrap();
    let wfa: Wfa = model.wfa.try_into().unwrap();
    let policy = GreedyPolicy::new(wfa, HistoryPolicy::uniform(2));
    assert_eq!(policy.greedy_action().unwrap(), 1);
}

#[test]
fn learn_with_excessive_rank_exits_3_with_spectrum() {
    let dir = workdir("learn-rank");
    let env = write_chain_env(&dir);
    let episodes = dir.join("episodes.jsonl");
    assert!(run(&[
        "sample",
        "--env",
        env.to_str().unwrap(),
        "--out",
        episodes.to_str().unwrap(),
        "--count",
        "50",
        "--len",
        "3",
        "--seed",
        "2",
    ])
    .status
    .success());
    let config = learn_config(
        &dir,
        r#"{
  "basis": {"max_prefixes": 3, "max_suffixes": 3, "max_len": 1},
  "rank": 20,
  "gamma": 0.5
}"#,
    );
    let result = run(&[
        "learn",
        "--env",
        env.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--episodes",
        episodes.to_str().unwrap(),
        "--out",
        dir.join("model.json").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("rank"), "stderr: {stderr}");
}

#[test]
fn compressed_identity_learning_matches_plain_model() {
    let dir = workdir("learn-compressed");
    let env = write_chain_env(&dir);
    let episodes = dir.join("episodes.jsonl");
    assert!(run(&[
        "sample",
        "--env",
        env.to_str().unwrap(),
        "--out",
        episodes.to_str().unwrap(),
        "--count",
        "2000",
        "--len",
        "6",
        "--seed",
        "5",
    ])
    .status
    .success());

    let plain_cfg = learn_config(&dir, CHAIN_LEARN);
    let plain_path = dir.join("plain.json");
    assert!(run(&[
        "learn",
        "--env",
        env.to_str().unwrap(),
        "--config",
        plain_cfg.to_str().unwrap(),
        "--episodes",
        episodes.to_str().unwrap(),
        "--out",
        plain_path.to_str().unwrap(),
    ])
    .status
    .success());

    let compressed_cfg = learn_config(
        &dir,
        r#"{
  "basis": {"max_prefixes": 8, "max_suffixes": 8, "max_len": 2},
  "rank": 2,
  "gamma": 0.5,
  "compressed": {"enabled": true, "d_u": 8, "d_v": 8, "seed": 0, "projection": "identity"}
}"#,
    );
    let compressed_path = dir.join("compressed.json");
    assert!(run(&[
        "learn",
        "--env",
        env.to_str().unwrap(),
        "--config",
        compressed_cfg.to_str().unwrap(),
        "--episodes",
        episodes.to_str().unwrap(),
        "--out",
        compressed_path.to_str().unwrap(),
    ])
    .status
    .success());

    let plain: Wfa = read_model(&plain_path).unwrap().wfa.try_into().unwrap();
    let compressed: Wfa = read_model(&compressed_path)
        .unwrap()
        .wfa
        .try_into()
        .unwrap();
    let words = uqf_core::alphabet::words_up_to(2, 1, 4);
    assert!(words.len() >= 20);
    for word in words.iter().take(20) {
        let a = plain.evaluate(word).unwrap();
        let b = compressed.evaluate(word).unwrap();
        assert!((a - b).abs() <= 1e-10, "word {word:?}: {a} vs {b}");
    }
}

#[test]
fn eval_baselines_append_rows_with_single_header() {
    let dir = workdir("eval");
    let csv = dir.join("metrics.csv");
    for baseline in ["random", "optimal"] {
        let result = run(&[
            "eval",
            "--env",
            "builtin:A",
            "--baseline",
            baseline,
            "--out",
            csv.to_str().unwrap(),
            "--eval-episodes",
            "50",
            "--max-len",
            "30",
            "--seed",
            "4",
        ]);
        assert!(result.status.success());
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "env,train_size,seed,mean_return,stderr");
    assert!(lines[1].starts_with("builtin:A,0,4,"));

    // Optimal beats random on this map.
    let value = |line: &str| -> f64 { line.split(',').nth(3).unwrap().parse().unwrap() };
    assert!(value(lines[2]) > value(lines[1]));
}

#[test]
fn eval_is_deterministic_under_fixed_seed() {
    let dir = workdir("eval-det");
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    for out in [&a, &b] {
        assert!(run(&[
            "eval",
            "--env",
            "builtin:C",
            "--baseline",
            "random",
            "--out",
            out.to_str().unwrap(),
            "--eval-episodes",
            "100",
            "--seed",
            "9",
        ])
        .status
        .success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn eval_rejects_model_env_mismatch() {
    let dir = workdir("eval-mismatch");
    let env = write_chain_env(&dir);
    let episodes = dir.join("episodes.jsonl");
    assert!(run(&[
        "sample",
        "--env",
        env.to_str().unwrap(),
        "--out",
        episodes.to_str().unwrap(),
        "--count",
        "500",
        "--len",
        "5",
        "--seed",
        "1",
    ])
    .status
    .success());
    let config = learn_config(&dir, CHAIN_LEARN);
    let model_path = dir.join("model.json");
    assert!(run(&[
        "learn",
        "--env",
        env.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--episodes",
        episodes.to_str().unwrap(),
        "--out",
        model_path.to_str().unwrap(),
    ])
    .status
    .success());

    // The model was trained on the chain env, not on builtin:A.
    let result = run(&[
        "eval",
        "--env",
        "builtin:A",
        "--model",
        model_path.to_str().unwrap(),
        "--out",
        dir.join("m.csv").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("hash"), "stderr: {stderr}");
}

#[test]
fn selfcheck_passes_on_pristine_build() {
    let result = run(&["selfcheck"]);
    assert!(result.status.success());
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("all 6 checks passed"), "stdout: {stdout}");
    assert!(stdout.contains("max error"));
}

#[test]
fn curve_reports_missing_config_as_config_error() {
    let result = run(&["curve", "--config", "/nonexistent/exp.json", "--out", "/tmp/x"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn curve_emits_cartesian_rows_plus_baselines() {
    let dir = workdir("curve-rows");
    let config = dir.join("exp.json");
    std::fs::write(
        &config,
        r#"{
  "env": "builtin:A",
  "sizes": [100, 800],
  "seeds": [0, 1],
  "train_len": 20,
  "learn": {
    "basis": {"max_prefixes": 60, "max_suffixes": 60, "max_len": 3},
    "rank": 2,
    "gamma": 0.6
  },
  "eval": {"episodes": 100, "max_len": 50, "gamma": 0.99}
}"#,
    )
    .unwrap();
    let result = run(&[
        "curve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let csv = std::fs::read_to_string(dir.join("out/curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    // Header + 2 baselines x 2 seeds + 2 sizes x 2 seeds.
    assert_eq!(lines.len(), 1 + 4 + 4);
    assert_eq!(lines[0], "env,method,train_size,seed,mean_return,stderr,note");
    assert_eq!(csv.matches(",random,").count(), 2);
    assert_eq!(csv.matches(",optimal,").count(), 2);
    assert_eq!(csv.matches(",uqf,").count(), 4);
}

#[test]
fn curve_records_cell_failures_and_continues() {
    let dir = workdir("curve-fail");
    let config = dir.join("exp.json");
    // Rank far above anything the data supports: every cell fails, the
    // sweep still completes with noted empty cells.
    std::fs::write(
        &config,
        r#"{
  "env": "builtin:A",
  "sizes": [50],
  "seeds": [0, 1],
  "train_len": 10,
  "learn": {
    "basis": {"max_prefixes": 20, "max_suffixes": 20, "max_len": 2},
    "rank": 19,
    "gamma": 0.6
  },
  "eval": {"episodes": 50, "max_len": 30, "gamma": 0.99},
  "baselines": []
}"#,
    )
    .unwrap();
    let result = run(&[
        "curve",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert!(result.status.success());
    let csv = std::fs::read_to_string(dir.join("out/curve.csv")).unwrap();
    let failed_rows: Vec<&str> = csv.lines().filter(|l| l.contains(",,,")).collect();
    assert_eq!(failed_rows.len(), 2, "csv:\n{csv}");
    assert!(failed_rows.iter().all(|l| l.contains("rank")));
}

#[test]
fn shipped_example_configs_parse() {
    // configs/ at the workspace root stays in sync with the code defaults.
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let experiment =
        uqf_cli::config::ExperimentConfig::load(&root.join("configs/gridworld-a.json")).unwrap();
    let default = uqf_cli::config::ExperimentConfig::gridworld_default("builtin:A");
    assert_eq!(experiment.sizes, default.sizes);
    assert_eq!(experiment.seeds, default.seeds);
    assert_eq!(experiment.train_len, default.train_len);
    assert_eq!(experiment.learn.rank, default.learn.rank);
    assert_eq!(experiment.learn.gamma, default.learn.gamma);
    assert_eq!(
        experiment.learn.basis.max_prefixes,
        default.learn.basis.max_prefixes
    );

    let learn = uqf_core::io::read_learn_config(&root.join("configs/learn-default.json")).unwrap();
    assert_eq!(learn.rank, default.learn.rank);
    assert!(learn.compressed.is_none());
}
