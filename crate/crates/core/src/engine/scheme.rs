use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the number of assignments enumerated exhaustively.
pub const DEFAULT_EXHAUSTIVE_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeMode {
    Exhaustive,
    Sampled,
}

/// How the permutation distribution is formed: every distinct group
/// assignment, or the identity plus `B` uniformly drawn assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationScheme {
    pub mode: SchemeMode,
    /// Number of random assignments drawn in sampled mode (the identity is
    /// added on top of these).
    pub permutations: u64,
    pub seed: u64,
    /// Stream selector for the seeded generator; lets many tests share one seed.
    #[serde(default)]
    pub stream: u64,
    pub cap: u128,
}

impl PermutationScheme {
    pub fn exhaustive() -> Self {
        Self {
            mode: SchemeMode::Exhaustive,
            permutations: 0,
            seed: 0,
            stream: 0,
            cap: DEFAULT_EXHAUSTIVE_CAP,
        }
    }

    pub fn exhaustive_with_cap(cap: u128) -> Self {
        Self { cap, ..Self::exhaustive() }
    }

    pub fn sampled(permutations: u64, seed: u64) -> Result<Self> {
        if permutations == 0 {
            return Err(Error::Config("sampled scheme needs at least one permutation".into()));
        }
        Ok(Self {
            mode: SchemeMode::Sampled,
            permutations,
            seed,
            stream: 0,
            cap: DEFAULT_EXHAUSTIVE_CAP,
        })
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn is_sampled(&self) -> bool {
        self.mode == SchemeMode::Sampled
    }
}
