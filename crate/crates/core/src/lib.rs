//! Exact randomized permutation tests, studentized statistics that stay
//! asymptotically valid when the groups differ in shape, a Monte Carlo
//! harness for rejection probabilities, and diagnostics for the coupling and
//! contiguity arguments behind them.

pub mod diagnostics;
pub mod distributions;
pub mod engine;
mod error;
pub mod montecarlo;
pub mod rational;
mod sample;
pub mod statistics;

pub use distributions::{DistributionSpec, RngStream};
pub use engine::{run_test, PermutationDistribution, PermutationScheme, RandomizedDecision, TestReport};
pub use error::{Error, Result};
pub use rational::Rational;
pub use sample::{group_slices, GroupedSample};
pub use statistics::{Statistic, StatisticDescriptor};
