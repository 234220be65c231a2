//! Rejection-probability simulation: draw groups from the given
//! distributions, run the sampled permutation test, and average the test
//! function over replications.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, RngStream};
use crate::engine::{check_alpha, permutation_distributions, randomized_decision, Execution, Outcome, PermutationScheme};
use crate::error::{Error, Result};
use crate::rational::{serde_ratio, to_f64, Rational};
use crate::sample::GroupedSample;
use crate::statistics::{Absolute, Statistic, StatisticDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sidedness {
    /// Reject for large values of the statistic.
    #[default]
    Upper,
    /// Reject for large values of `|T|`.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectionRule {
    /// Count `phi`: 1 on reject, `a` on a tie at the critical value, 0 otherwise.
    #[default]
    Randomized,
    /// Count only strict exceedances of the critical value.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationPlan {
    /// One distribution per group.
    pub distributions: Vec<DistributionSpec>,
    /// Group sizes per column of the table.
    pub sizes: Vec<Vec<usize>>,
    pub statistics: Vec<StatisticDescriptor>,
    #[serde(with = "serde_ratio")]
    pub alpha: Rational,
    pub replications: u64,
    /// Sampled permutations per test (`B`).
    pub permutations: u64,
    pub seed: u64,
    #[serde(default)]
    pub sided: Sidedness,
    #[serde(default)]
    pub rule: RejectionRule,
    /// Location shift added to every observation of the first group.
    #[serde(default)]
    pub shift: f64,
}

impl SimulationPlan {
    pub fn validate(&self) -> Result<()> {
        check_alpha(&self.alpha)?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.permutations == 0 {
            return Err(Error::Config("permutations must be at least 1".into()));
        }
        if self.statistics.is_empty() || self.sizes.is_empty() {
            return Err(Error::Config("plan needs at least one statistic and one size tuple".into()));
        }
        if !self.shift.is_finite() {
            return Err(Error::Config("shift must be finite".into()));
        }
        for sizes in &self.sizes {
            if sizes.len() != self.distributions.len() {
                return Err(Error::Config(format!(
                    "size tuple {sizes:?} does not match {} distributions",
                    self.distributions.len()
                )));
            }
            for stat in &self.statistics {
                stat.check_layout(sizes)?;
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        let names: Vec<String> = self.distributions.iter().map(|d| d.to_string()).collect();
        names.join(" vs ")
    }
}

/// One table cell: a statistic at one size tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationCell {
    pub distributions: String,
    pub sizes: Vec<usize>,
    pub statistic: String,
    pub estimate: f64,
    /// `sqrt(p (1 - p) / R)`.
    pub se: f64,
    pub replications: u64,
    pub permutations: u64,
    pub seed: u64,
    pub shift: f64,
    /// Replications whose observed statistic was undefined (counted as accept).
    pub undefined: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SimulationTable {
    pub cells: Vec<SimulationCell>,
}

impl SimulationTable {
    pub fn get(&self, statistic: &str, sizes: &[usize]) -> Option<&SimulationCell> {
        self.cells.iter().find(|c| c.statistic == statistic && c.sizes == sizes)
    }

    /// Rows are distribution tuple x statistic, columns are size tuples.
    pub fn render_text(&self) -> String {
        let mut columns: Vec<&[usize]> = Vec::new();
        let mut rows: Vec<(&str, &str)> = Vec::new();
        for c in &self.cells {
            if !columns.contains(&c.sizes.as_slice()) {
                columns.push(&c.sizes);
            }
            if !rows.contains(&(c.distributions.as_str(), c.statistic.as_str())) {
                rows.push((&c.distributions, &c.statistic));
            }
        }
        let head: Vec<String> = columns
            .iter()
            .map(|s| s.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("/"))
            .collect();
        let label_width = rows
            .iter()
            .map(|(d, s)| d.len().max(s.len()))
            .chain(std::iter::once(13))
            .max()
            .unwrap_or(13);
        let col_width = head.iter().map(|h| h.len()).chain(std::iter::once(15)).max().unwrap_or(15);

        let mut out = String::new();
        let _ = write!(out, "{:<label_width$}", "distributions");
        let _ = write!(out, "  {:<10}", "statistic");
        for h in &head {
            let _ = write!(out, "  {h:>col_width$}");
        }
        out.push('\n');
        let mut previous = "";
        for &(dists, stat) in &rows {
            let label = if dists == previous { "" } else { dists };
            previous = dists;
            let _ = write!(out, "{label:<label_width$}  {stat:<10}");
            for sizes in &columns {
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.distributions == dists && c.statistic == stat && c.sizes == *sizes);
                let text = match cell {
                    Some(c) if c.replications > 1 => format!("{:.4} ({:.4})", c.estimate, c.se),
                    Some(c) => format!("{:.4} (-)", c.estimate),
                    None => "-".into(),
                };
                let _ = write!(out, "  {text:>col_width$}");
            }
            out.push('\n');
        }
        out
    }
}

/// Data and permutation streams for one replication.
fn replication_streams(seed: u64, column: usize, replication: u64) -> (RngStream, RngStream) {
    let base = ((column as u64) << 40 | replication) << 1;
    (RngStream::new(seed, base), RngStream::new(seed, base | 1))
}

/// Per-replication test-function values for every statistic, or `None` where
/// the observed statistic was undefined.
fn replicate(plan: &SimulationPlan, stats: &[&dyn Statistic], sizes: &[usize], column: usize, replication: u64) -> Result<Vec<Option<f64>>> {
    let (data_stream, perm_stream) = replication_streams(plan.seed, column, replication);
    let mut rng = data_stream.rng();
    let mut values = Vec::with_capacity(sizes.iter().sum());
    for (g, (dist, &n)) in plan.distributions.iter().zip(sizes).enumerate() {
        let shift = if g == 0 { plan.shift } else { 0.0 };
        values.extend((0..n).map(|_| dist.draw(&mut rng) + shift));
    }
    let sample = GroupedSample::new(values, sizes.to_vec())?;
    let scheme = PermutationScheme::sampled(plan.permutations, perm_stream.seed)?.with_stream(perm_stream.stream_id);

    let dists = match permutation_distributions(&sample, stats, &scheme, Execution::Sequential) {
        Ok(d) => d,
        // The observed statistic of at least one variant is undefined; fall back
        // to evaluating each statistic alone.
        Err(Error::StatisticUndefined { .. }) if stats.len() > 1 => {
            return stats
                .iter()
                .map(|s| replicate(plan, std::slice::from_ref(s), sizes, column, replication).map(|v| v[0]))
                .collect();
        }
        Err(Error::StatisticUndefined { .. }) => return Ok(vec![None]),
        Err(e) => return Err(e),
    };
    dists
        .iter()
        .map(|d| {
            let decision = randomized_decision(d, d.observed(), &plan.alpha)?;
            Ok(Some(match (plan.rule, decision.outcome) {
                (_, Outcome::Reject) => 1.0,
                (RejectionRule::Randomized, Outcome::Randomize) => to_f64(&decision.phi),
                _ => 0.0,
            }))
        })
        .collect()
}

/// Runs every size tuple of the plan. Deterministic in the seed and
/// independent of the worker count.
pub fn rejection_probability(plan: &SimulationPlan) -> Result<SimulationTable> {
    plan.validate()?;
    let abs: Vec<Absolute<StatisticDescriptor>> = plan.statistics.iter().cloned().map(Absolute).collect();
    let stats: Vec<&dyn Statistic> = match plan.sided {
        Sidedness::Upper => plan.statistics.iter().map(|s| s as &dyn Statistic).collect(),
        Sidedness::Two => abs.iter().map(|s| s as &dyn Statistic).collect(),
    };
    let mut table = SimulationTable::default();
    for (column, sizes) in plan.sizes.iter().enumerate() {
        let per_rep: Vec<Vec<Option<f64>>> = (0..plan.replications)
            .into_par_iter()
            .map(|r| replicate(plan, &stats, sizes, column, r))
            .collect::<Result<_>>()?;
        for (s, stat) in plan.statistics.iter().enumerate() {
            // Summed in replication order so the result never depends on scheduling.
            let (sum, undefined) = per_rep.iter().fold((0.0, 0u64), |(sum, undef), rep| match rep[s] {
                Some(phi) => (sum + phi, undef),
                None => (sum, undef + 1),
            });
            let r = plan.replications as f64;
            let estimate = sum / r;
            table.cells.push(SimulationCell {
                distributions: plan.label(),
                sizes: sizes.clone(),
                statistic: stat.to_string(),
                estimate,
                se: (estimate * (1.0 - estimate) / r).max(0.0).sqrt(),
                replications: plan.replications,
                permutations: plan.permutations,
                seed: plan.seed,
                shift: plan.shift,
                undefined,
            });
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub shift: f64,
    pub table: SimulationTable,
}

/// Rejection probabilities as the first group is shifted by each `delta`.
/// All shifts reuse the same random streams, so `delta = 0` reproduces
/// [`rejection_probability`] exactly.
pub fn power_curve(plan: &SimulationPlan, shifts: &[f64]) -> Result<Vec<PowerPoint>> {
    shifts
        .iter()
        .map(|&shift| {
            let shifted = SimulationPlan { shift, ..plan.clone() };
            Ok(PowerPoint { shift, table: rejection_probability(&shifted)? })
        })
        .collect()
}
