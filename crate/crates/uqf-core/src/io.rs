//! File formats: POMDP models and WFAs as JSON, episodes as JSON-lines,
//! learning configs.
//!
//! All formats are stable and deterministic: fixed field order, row-major
//! nested arrays, shortest-roundtrip float formatting.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pomdp::{Episode, Pomdp, Step};
use crate::rng::fnv1a_64;
use crate::spectral::{BasisConfig, CompressedConfig, LearnConfig};
use crate::wfa::Wfa;
use crate::Symbol;

/// POMDP document: sizes, row-major nested tensors, `mu` and `gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PomdpFile {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_obs: usize,
    #[serde(rename = "T")]
    pub transition: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Z")]
    pub emission: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub reward: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub gamma: f64,
}

impl From<&Pomdp> for PomdpFile {
    fn from(m: &Pomdp) -> Self {
        let nested3 = |flat: &[f64], d1: usize, d2: usize, d3: usize| -> Vec<Vec<Vec<f64>>> {
            (0..d1)
                .map(|i| {
                    (0..d2)
                        .map(|j| flat[(i * d2 + j) * d3..][..d3].to_vec())
                        .collect()
                })
                .collect()
        };
        PomdpFile {
            num_states: m.num_states,
            num_actions: m.num_actions,
            num_obs: m.num_obs,
            transition: nested3(&m.transition, m.num_states, m.num_actions, m.num_states),
            emission: nested3(&m.emission, m.num_states, m.num_actions, m.num_obs),
            reward: (0..m.num_states)
                .map(|s| m.reward[s * m.num_actions..][..m.num_actions].to_vec())
                .collect(),
            mu: m.initial.clone(),
            gamma: m.gamma,
        }
    }
}

impl TryFrom<PomdpFile> for Pomdp {
    type Error = Error;

    fn try_from(f: PomdpFile) -> Result<Pomdp> {
        let flat3 = |nested: &[Vec<Vec<f64>>], d1: usize, d2: usize, d3: usize, name: &str| {
            if nested.len() != d1
                || nested.iter().any(|m| m.len() != d2)
                || nested.iter().flatten().any(|row| row.len() != d3)
            {
                return Err(Error::InvalidConfig(format!(
                    "{name} does not have shape {d1} x {d2} x {d3}"
                )));
            }
            Ok(nested
                .iter()
                .flatten()
                .flatten()
                .copied()
                .collect::<Vec<f64>>())
        };
        let transition = flat3(&f.transition, f.num_states, f.num_actions, f.num_states, "T")?;
        let emission = flat3(&f.emission, f.num_states, f.num_actions, f.num_obs, "Z")?;
        if f.reward.len() != f.num_states
            || f.reward.iter().any(|row| row.len() != f.num_actions)
        {
            return Err(Error::InvalidConfig(format!(
                "R does not have shape {} x {}",
                f.num_states, f.num_actions
            )));
        }
        Ok(Pomdp {
            num_states: f.num_states,
            num_actions: f.num_actions,
            num_obs: f.num_obs,
            transition,
            emission,
            reward: f.reward.into_iter().flatten().collect(),
            initial: f.mu,
            gamma: f.gamma,
        })
    }
}

pub fn write_pomdp(path: &Path, model: &Pomdp) -> Result<()> {
    let text = serde_json::to_string_pretty(&PomdpFile::from(model))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_pomdp(path: &Path) -> Result<Pomdp> {
    let text = std::fs::read_to_string(path)?;
    let file: PomdpFile = serde_json::from_str(&text)?;
    file.try_into()
}

/// Stable content hash of a model (over its canonical JSON document).
pub fn pomdp_hash(model: &Pomdp) -> Result<String> {
    let text = serde_json::to_string(&PomdpFile::from(model))?;
    Ok(format!("{:016x}", fnv1a_64(text.as_bytes())))
}

/// WFA document: sizes, weights, transitions as one row-major matrix per
/// symbol id (`action * num_obs + observation`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WfaFile {
    pub n: usize,
    pub num_actions: usize,
    pub num_obs: usize,
    pub alpha: Vec<f64>,
    pub omega: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

impl From<&Wfa> for WfaFile {
    fn from(w: &Wfa) -> Self {
        let n = w.num_states();
        WfaFile {
            n,
            num_actions: w.num_actions(),
            num_obs: w.num_obs(),
            alpha: w.alpha().iter().copied().collect(),
            omega: w.omega().iter().copied().collect(),
            transitions: w
                .transitions()
                .iter()
                .map(|m| {
                    // Row-major flattening.
                    (0..n)
                        .flat_map(|i| (0..n).map(move |j| (i, j)))
                        .map(|(i, j)| m[(i, j)])
                        .collect()
                })
                .collect(),
        }
    }
}

impl TryFrom<WfaFile> for Wfa {
    type Error = Error;

    fn try_from(f: WfaFile) -> Result<Wfa> {
        let n = f.n;
        if f.transitions.iter().any(|m| m.len() != n * n) {
            return Err(Error::InvalidConfig(format!(
                "transition matrices must have {} entries",
                n * n
            )));
        }
        Wfa::new(
            f.num_actions,
            f.num_obs,
            nalgebra::DVector::from_vec(f.alpha),
            f.transitions
                .iter()
                .map(|m| nalgebra::DMatrix::from_row_slice(n, n, m))
                .collect(),
            nalgebra::DVector::from_vec(f.omega),
        )
    }
}

/// The sampling policy recorded with a persisted model; the score divisor
/// used when acting with it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SamplingSpec {
    Uniform,
}

/// A persisted UQF model: the automaton, the discount it was built with,
/// the sampling policy that generated its training data, and the hash of
/// the environment it was trained on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub wfa: WfaFile,
    pub gamma: f64,
    pub sampling: SamplingSpec,
    pub env_hash: String,
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<()> {
    let text = serde_json::to_string_pretty(model)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// JSON-lines episode record: `{"seed": ..., "steps": [[a, o, reward], ...]}`.
/// Hidden states are not persisted.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct EpisodeRecord {
    seed: u64,
    steps: Vec<(usize, usize, f64)>,
}

pub fn write_episodes(path: &Path, episodes: &[Episode]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    for episode in episodes {
        let record = EpisodeRecord {
            seed: episode.seed,
            steps: episode
                .steps
                .iter()
                .map(|s| (s.action, s.observation, s.reward))
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads JSON-lines episodes. Hidden states are absent from the persisted
/// form; they are restored as `usize::MAX` placeholders that no learner
/// reads.
pub fn read_episodes(path: &Path) -> Result<Vec<Episode>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut episodes = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EpisodeRecord = serde_json::from_str(&line)?;
        episodes.push(Episode {
            seed: record.seed,
            steps: record
                .steps
                .into_iter()
                .map(|(action, observation, reward)| Step {
                    action,
                    observation,
                    reward,
                    state_after: usize::MAX,
                })
                .collect(),
        });
    }
    Ok(episodes)
}

/// Sidecar manifest written next to a sampled episodes file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleManifest {
    pub seed: u64,
    pub env_hash: String,
    pub count: usize,
    pub length: usize,
    pub num_actions: usize,
    pub num_obs: usize,
}

pub fn manifest_path(episodes_path: &Path) -> std::path::PathBuf {
    let mut name = episodes_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".manifest.json");
    episodes_path.with_file_name(name)
}

pub fn write_manifest(episodes_path: &Path, manifest: &SampleManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(manifest_path(episodes_path), text + "\n")?;
    Ok(())
}

/// On-disk learning config with the exact documented keys; `compressed` may
/// be omitted or disabled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnConfigFile {
    pub basis: BasisConfig,
    pub rank: usize,
    pub gamma: f64,
    #[serde(default)]
    pub compressed: Option<CompressedFileSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressedFileSection {
    pub enabled: bool,
    pub d_u: usize,
    pub d_v: usize,
    pub seed: u64,
    /// `gaussian` (default) or `identity` (reduces to the plain path;
    /// verification aid).
    #[serde(default)]
    pub projection: crate::spectral::ProjectionKind,
}

impl From<LearnConfigFile> for LearnConfig {
    fn from(f: LearnConfigFile) -> Self {
        LearnConfig {
            basis: f.basis,
            rank: f.rank,
            gamma: f.gamma,
            compressed: f.compressed.and_then(|c| {
                c.enabled.then_some(CompressedConfig {
                    d_u: c.d_u,
                    d_v: c.d_v,
                    seed: c.seed,
                    projection: c.projection,
                })
            }),
        }
    }
}

pub fn read_learn_config(path: &Path) -> Result<LearnConfig> {
    let text = std::fs::read_to_string(path)?;
    let file: LearnConfigFile = serde_json::from_str(&text)?;
    Ok(file.into())
}

/// The symbols of an episode file, for sanity checks against an alphabet.
pub fn episodes_alphabet_ok(episodes: &[Episode], num_actions: usize, num_obs: usize) -> bool {
    episodes.iter().all(|e| {
        e.symbols()
            .iter()
            .all(|s: &Symbol| s.in_alphabet(num_actions, num_obs))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{chain_model, sample_episodes, validate, StatePolicy};

    fn tempdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "uqf-io-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn pomdp_roundtrip_preserves_model() {
        let dir = tempdir();
        let model = chain_model(0.5);
        let path = dir.join("chain.json");
        write_pomdp(&path, &model).unwrap();
        let back = read_pomdp(&path).unwrap();
        assert_eq!(model, back);
        assert!(validate(&back).is_ok());
        // Field names are part of the contract.
        let text = std::fs::read_to_string(&path).unwrap();
        for key in ["num_states", "num_actions", "num_obs", "\"T\"", "\"Z\"", "\"R\"", "mu", "gamma"] {
            assert!(text.contains(key), "missing {key}");
        }
    }

    #[test]
    fn pomdp_file_shape_mismatch_rejected() {
        let model = chain_model(0.5);
        let mut file = PomdpFile::from(&model);
        file.transition[0].pop();
        assert!(matches!(
            Pomdp::try_from(file),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn episodes_jsonl_roundtrip_without_hidden_states() {
        let dir = tempdir();
        let model = chain_model(0.5);
        let policy = StatePolicy::uniform(2, 2);
        let episodes = sample_episodes(&model, &policy, 5, 4, 21).unwrap();
        let path = dir.join("episodes.jsonl");
        write_episodes(&path, &episodes).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(!text.contains("state_after"));

        let back = read_episodes(&path).unwrap();
        assert_eq!(back.len(), episodes.len());
        for (a, b) in episodes.iter().zip(&back) {
            assert_eq!(a.seed, b.seed);
            assert_eq!(a.symbols(), b.symbols());
            let rewards_a: Vec<f64> = a.steps.iter().map(|s| s.reward).collect();
            let rewards_b: Vec<f64> = b.steps.iter().map(|s| s.reward).collect();
            assert_eq!(rewards_a, rewards_b);
        }
    }

    #[test]
    fn wfa_roundtrip_preserves_values() {
        let dir = tempdir();
        let model = chain_model(0.5);
        let policy = StatePolicy::uniform(2, 2);
        let wfa = crate::pomdp::exact_wfa(&model, &policy)
            .unwrap()
            .to_uqf(0.5)
            .unwrap();
        let path = dir.join("wfa.json");
        let file = ModelFile {
            wfa: WfaFile::from(&wfa),
            gamma: 0.5,
            sampling: SamplingSpec::Uniform,
            env_hash: pomdp_hash(&model).unwrap(),
        };
        write_model(&path, &file).unwrap();
        let back: Wfa = read_model(&path).unwrap().wfa.try_into().unwrap();
        for word in crate::alphabet::words_up_to(2, 1, 3) {
            assert_eq!(
                wfa.evaluate(&word).unwrap(),
                back.evaluate(&word).unwrap()
            );
        }
    }

    #[test]
    fn learn_config_exact_keys_and_disabled_compression() {
        let dir = tempdir();
        let path = dir.join("learn.json");
        std::fs::write(
            &path,
            r#"{
  "basis": {"max_prefixes": 40, "max_suffixes": 40, "max_len": 3},
  "rank": 6,
  "gamma": 0.6,
  "compressed": {"enabled": false, "d_u": 32, "d_v": 32, "seed": 9}
}"#,
        )
        .unwrap();
        let config = read_learn_config(&path).unwrap();
        assert_eq!(config.basis.max_prefixes, 40);
        assert_eq!(config.rank, 6);
        assert!(config.compressed.is_none());

        std::fs::write(
            &path,
            r#"{
  "basis": {"max_prefixes": 8, "max_suffixes": 8, "max_len": 2},
  "rank": 2,
  "gamma": 0.5,
  "compressed": {"enabled": true, "d_u": 16, "d_v": 8, "seed": 3}
}"#,
        )
        .unwrap();
        let config = read_learn_config(&path).unwrap();
        let compressed = config.compressed.unwrap();
        assert_eq!(compressed.d_u, 16);
        assert_eq!(compressed.d_v, 8);
    }

    #[test]
    fn manifest_path_appends_suffix() {
        let p = manifest_path(Path::new("/tmp/run/episodes.jsonl"));
        assert_eq!(p, Path::new("/tmp/run/episodes.jsonl.manifest.json"));
    }

    #[test]
    fn pomdp_hash_distinguishes_models() {
        let a = pomdp_hash(&chain_model(0.5)).unwrap();
        let b = pomdp_hash(&chain_model(0.9)).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, pomdp_hash(&chain_model(0.5)).unwrap());
    }
}
