use thiserror::Error;

/// Errors raised while configuring or running a permutation test.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("exhaustive enumeration needs {needed} assignments, above the cap of {cap}; use sampled permutations")]
    CapExceeded { needed: u128, cap: u128 },

    #[error("statistic `{statistic}` is undefined on assignment {assignment:?}")]
    StatisticUndefined {
        statistic: String,
        /// Pooled positions in group order; empty for the observed data.
        assignment: Vec<usize>,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
