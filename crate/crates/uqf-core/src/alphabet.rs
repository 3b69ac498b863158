//! The action–observation alphabet shared by models, automata and learners.

use serde::{Deserialize, Serialize};

use crate::rng::fnv1a_64;

/// One action–observation pair; the alphabet of every sequence in this crate
/// is the product of the action set and the observation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol {
    pub action: usize,
    pub observation: usize,
}

impl Symbol {
    pub fn new(action: usize, observation: usize) -> Self {
        Symbol {
            action,
            observation,
        }
    }

    /// Dense symbol id: `action * num_obs + observation`.
    pub fn id(&self, num_obs: usize) -> usize {
        self.action * num_obs + self.observation
    }

    pub fn from_id(id: usize, num_obs: usize) -> Self {
        Symbol {
            action: id / num_obs,
            observation: id % num_obs,
        }
    }

    pub fn in_alphabet(&self, num_actions: usize, num_obs: usize) -> bool {
        self.action < num_actions && self.observation < num_obs
    }
}

/// All symbols of an `num_actions x num_obs` alphabet in id order.
pub fn symbols(num_actions: usize, num_obs: usize) -> Vec<Symbol> {
    let mut out = Vec::with_capacity(num_actions * num_obs);
    for action in 0..num_actions {
        for observation in 0..num_obs {
            out.push(Symbol {
                action,
                observation,
            });
        }
    }
    out
}

/// All words of length `0..=max_len`, shortest first, lexicographic within a
/// length. The empty word comes first.
pub fn words_up_to(num_actions: usize, num_obs: usize, max_len: usize) -> Vec<Vec<Symbol>> {
    let sigma = symbols(num_actions, num_obs);
    let mut out: Vec<Vec<Symbol>> = vec![Vec::new()];
    let mut frontier: Vec<Vec<Symbol>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * sigma.len());
        for word in &frontier {
            for &sym in &sigma {
                let mut extended = word.clone();
                extended.push(sym);
                next.push(extended);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Stable 64-bit hash of a symbol sequence (FNV-1a over little-endian ids).
///
/// This is the documented hash that keys lazily generated projection rows;
/// it must not change across platforms or releases.
pub fn word_hash(word: &[Symbol]) -> u64 {
    let mut bytes = Vec::with_capacity(word.len() * 16);
    for sym in word {
        bytes.extend_from_slice(&(sym.action as u64).to_le_bytes());
        bytes.extend_from_slice(&(sym.observation as u64).to_le_bytes());
    }
    fnv1a_64(&bytes)
}
