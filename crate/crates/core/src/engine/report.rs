use serde::{Deserialize, Serialize};

use super::decision::{check_alpha, p_value, randomized_decision, RandomizedDecision};
use super::distribution::{permutation_distributions, Execution, PermutationDistribution};
use super::scheme::PermutationScheme;
use crate::error::Result;
use crate::rational::{serde_ratio, Rational};
use crate::sample::GroupedSample;
use crate::statistics::Statistic;

/// Quantiles of a permutation distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub size: u64,
    pub distinct: u64,
    #[serde(with = "crate::rational::serde_f64::vec")]
    pub levels: Vec<f64>,
    #[serde(with = "crate::rational::serde_f64::vec")]
    pub quantiles: Vec<f64>,
}

pub const SUMMARY_LEVELS: [f64; 9] = [0.0, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 1.0];

impl DistributionSummary {
    pub fn of(dist: &PermutationDistribution) -> Self {
        Self {
            size: dist.len(),
            distinct: dist.atoms().len() as u64,
            levels: SUMMARY_LEVELS.to_vec(),
            quantiles: SUMMARY_LEVELS.iter().map(|&q| dist.quantile(q)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: String,
    pub observed: f64,
    pub decision: RandomizedDecision,
    #[serde(with = "serde_ratio")]
    pub p_value: Rational,
    #[serde(with = "serde_ratio")]
    pub alpha: Rational,
    pub scheme: PermutationScheme,
    pub distribution: DistributionSummary,
}

pub fn run_test(sample: &GroupedSample, stat: &dyn Statistic, scheme: &PermutationScheme, alpha: &Rational) -> Result<TestReport> {
    run_test_with(sample, stat, scheme, alpha, Execution::Sequential)
}

pub fn run_test_with(
    sample: &GroupedSample,
    stat: &dyn Statistic,
    scheme: &PermutationScheme,
    alpha: &Rational,
    execution: Execution,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let dist = permutation_distributions(sample, &[stat], scheme, execution)?.remove(0);
    let observed = dist.observed();
    Ok(TestReport {
        statistic: stat.name().to_string(),
        observed,
        decision: randomized_decision(&dist, observed, alpha)?,
        p_value: p_value(&dist, observed),
        alpha: *alpha,
        scheme: *scheme,
        distribution: DistributionSummary::of(&dist),
    })
}
