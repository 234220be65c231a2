use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::assignments::{enumerate_assignments, sample_assignments, Assignment};
use super::scheme::{PermutationScheme, SchemeMode};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::sample::GroupedSample;
use crate::statistics::Statistic;

/// Statistic values over the scheme's assignments, each carrying weight `1/M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationDistribution {
    /// All `M` values, ascending.
    #[serde(with = "crate::rational::serde_f64::vec")]
    values: Vec<f64>,
    /// Value at the identity assignment (the observed statistic).
    observed: f64,
    scheme: PermutationScheme,
}

impl PermutationDistribution {
    pub(crate) fn from_values(mut values: Vec<f64>, observed: f64, scheme: PermutationScheme) -> Self {
        values.sort_unstable_by(f64::total_cmp);
        Self { values, observed, scheme }
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.values
    }

    /// The statistic at the identity assignment.
    pub fn observed(&self) -> f64 {
        self.observed
    }

    pub fn scheme(&self) -> &PermutationScheme {
        &self.scheme
    }

    /// Number of evaluated assignments `M`.
    pub fn len(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self) -> Rational {
        Rational::new(1, self.len() as i128)
    }

    pub fn count_le(&self, t: f64) -> u64 {
        self.values.partition_point(|&v| v <= t) as u64
    }

    pub fn count_lt(&self, t: f64) -> u64 {
        self.values.partition_point(|&v| v < t) as u64
    }

    pub fn count_ge(&self, t: f64) -> u64 {
        self.len() - self.count_lt(t)
    }

    pub fn count_gt(&self, t: f64) -> u64 {
        self.len() - self.count_le(t)
    }

    /// `R(t)`: the weight of values `<= t`.
    pub fn cdf(&self, t: f64) -> Rational {
        Rational::new(self.count_le(t) as i128, self.len() as i128)
    }

    /// Distinct values with their total weight, ascending.
    pub fn atoms(&self) -> Vec<(f64, Rational)> {
        let m = self.len() as i128;
        let mut out: Vec<(f64, i128)> = Vec::new();
        for &v in &self.values {
            match out.last_mut() {
                Some((last, c)) if *last == v => *c += 1,
                _ => out.push((v, 1)),
            }
        }
        out.into_iter().map(|(v, c)| (v, Rational::new(c, m))).collect()
    }

    /// Smallest value whose cdf reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let m = self.values.len();
        let idx = ((q * m as f64).ceil() as usize).clamp(1, m) - 1;
        self.values[idx]
    }
}

/// Sequential or rayon-parallel evaluation. Both give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

enum Outcome {
    Value(f64),
    Undefined,
}

fn eval_all(stats: &[&dyn Statistic], values: &[f64], sizes: &[usize], order: &[usize], buf: &mut Vec<f64>, out: &mut Vec<Outcome>) {
    out.clear();
    buf.clear();
    buf.extend(order.iter().map(|&i| values[i]));
    for stat in stats {
        out.push(match stat.eval_pooled(buf, sizes) {
            Some(v) if !v.is_nan() => Outcome::Value(v),
            _ => Outcome::Undefined,
        });
    }
}

/// Permutation distribution of a single statistic.
pub fn permutation_distribution(
    sample: &GroupedSample,
    stat: &dyn Statistic,
    scheme: &PermutationScheme,
) -> Result<PermutationDistribution> {
    Ok(permutation_distributions(sample, &[stat], scheme, Execution::Sequential)?.remove(0))
}

/// Permutation distributions of several statistics over one shared set of
/// assignments.
///
/// Exhaustive mode fails on the first assignment (in enumeration order) where
/// any statistic is undefined. Sampled mode fails only when the observed
/// statistic is undefined; undefined permuted values count as `+inf`.
pub fn permutation_distributions(
    sample: &GroupedSample,
    stats: &[&dyn Statistic],
    scheme: &PermutationScheme,
    execution: Execution,
) -> Result<Vec<PermutationDistribution>> {
    if stats.is_empty() {
        return Err(Error::Config("no statistic given".into()));
    }
    for stat in stats {
        stat.check_layout(sample.sizes())?;
    }
    let per_assignment: Vec<Vec<Outcome>> = match (scheme.mode, execution) {
        (SchemeMode::Exhaustive, Execution::Sequential) => {
            let mut buf = Vec::with_capacity(sample.total());
            enumerate_assignments(sample, scheme.cap)?
                .map(|a| {
                    let mut out = Vec::with_capacity(stats.len());
                    eval_all(stats, sample.values(), sample.sizes(), a.order(), &mut buf, &mut out);
                    check_exhaustive(stats, &out, &a)?;
                    Ok(out)
                })
                .collect::<Result<_>>()?
        }
        (SchemeMode::Exhaustive, Execution::Parallel) => {
            let assignments: Vec<Assignment> = enumerate_assignments(sample, scheme.cap)?.collect();
            let outs: Vec<Vec<Outcome>> = assignments
                .par_iter()
                .map_init(Vec::new, |buf, a| {
                    let mut out = Vec::with_capacity(stats.len());
                    eval_all(stats, sample.values(), sample.sizes(), a.order(), buf, &mut out);
                    out
                })
                .collect();
            for (out, a) in outs.iter().zip(&assignments) {
                check_exhaustive(stats, out, a)?;
            }
            outs
        }
        (SchemeMode::Sampled, Execution::Sequential) => {
            let mut it = sample_assignments(sample, scheme)?;
            let mut order = Vec::with_capacity(sample.total());
            let mut buf = Vec::with_capacity(sample.total());
            let mut outs = Vec::with_capacity(scheme.permutations as usize + 1);
            while it.next_into(&mut order) {
                let mut out = Vec::with_capacity(stats.len());
                eval_all(stats, sample.values(), sample.sizes(), &order, &mut buf, &mut out);
                outs.push(out);
            }
            outs
        }
        (SchemeMode::Sampled, Execution::Parallel) => {
            // Draw every assignment from the seed before fanning out.
            let assignments: Vec<Assignment> = sample_assignments(sample, scheme)?.collect();
            assignments
                .par_iter()
                .map_init(Vec::new, |buf, a| {
                    let mut out = Vec::with_capacity(stats.len());
                    eval_all(stats, sample.values(), sample.sizes(), a.order(), buf, &mut out);
                    out
                })
                .collect()
        }
    };

    stats
        .iter()
        .enumerate()
        .map(|(s, stat)| {
            let observed = match per_assignment[0][s] {
                Outcome::Value(v) => v,
                Outcome::Undefined => {
                    return Err(Error::StatisticUndefined {
                        statistic: stat.name().to_string(),
                        assignment: Assignment::identity(sample.total()).into_order(),
                    })
                }
            };
            let values = per_assignment
                .iter()
                .map(|out| match out[s] {
                    Outcome::Value(v) => v,
                    Outcome::Undefined => f64::INFINITY,
                })
                .collect();
            Ok(PermutationDistribution::from_values(values, observed, *scheme))
        })
        .collect()
}

fn check_exhaustive(stats: &[&dyn Statistic], out: &[Outcome], a: &Assignment) -> Result<()> {
    match out.iter().position(|o| matches!(o, Outcome::Undefined)) {
        Some(s) => Err(Error::StatisticUndefined {
            statistic: stats[s].name().to_string(),
            assignment: a.order().to_vec(),
        }),
        None => Ok(()),
    }
}
