//! Empirical check of the Hoeffding condition: for two independent uniform
//! permutations `G`, `G'`, the pair `(T(Z_G), T(Z_G'))` should look
//! independent.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, RngStream};
use crate::error::{Error, Result};
use crate::sample::GroupedSample;
use crate::statistics::Statistic;

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const MIN_PAIRS: u64 = 1000;
const GRID_LEVELS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Data behind each pair. `Generated` draws a fresh sample per pair, so
/// statistics that are constant given the data still vary across pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SampleSource {
    Fixed(GroupedSample),
    Generated { distributions: Vec<DistributionSpec>, sizes: Vec<usize> },
}

impl SampleSource {
    fn sizes(&self) -> &[usize] {
        match self {
            SampleSource::Fixed(s) => s.sizes(),
            SampleSource::Generated { sizes, .. } => sizes,
        }
    }

    fn validate(&self) -> Result<()> {
        if let SampleSource::Generated { distributions, sizes } = self {
            if distributions.len() != sizes.len() {
                return Err(Error::Config("one distribution per group is required".into()));
            }
            crate::sample::validate_sizes(sizes)?;
        }
        Ok(())
    }

    fn pooled<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SampleSource::Fixed(s) => s.values().to_vec(),
            SampleSource::Generated { distributions, sizes } => distributions
                .iter()
                .zip(sizes)
                .flat_map(|(d, &n)| d.sample(n, rng))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingReport {
    pub statistic: String,
    pub pairs: u64,
    pub undefined_pairs: u64,
    pub grid: Vec<f64>,
    /// `max |F_joint(s, t) - F(s) F'(t)|` over the grid.
    pub max_discrepancy: f64,
    pub threshold: f64,
    pub passes: bool,
}

fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64
}

fn quantile(sorted: &[f64], level: f64) -> f64 {
    let idx = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Maximum joint-vs-product c.d.f. discrepancy over a quantile grid.
pub fn max_discrepancy(pairs: &[(f64, f64)]) -> (f64, Vec<f64>) {
    if pairs.is_empty() {
        return (0.0, Vec::new());
    }
    let mut a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let ga: Vec<f64> = GRID_LEVELS.iter().map(|&l| quantile(&a, l)).collect();
    let gb: Vec<f64> = GRID_LEVELS.iter().map(|&l| quantile(&b, l)).collect();
    let n = pairs.len() as f64;
    let mut worst = 0.0_f64;
    for &s in &ga {
        let fs = ecdf(&a, s);
        for &t in &gb {
            let joint = pairs.iter().filter(|(x, y)| *x <= s && *y <= t).count() as f64 / n;
            worst = worst.max((joint - fs * ecdf(&b, t)).abs());
        }
    }
    (worst, ga)
}

pub fn hoeffding_pair_check(source: &SampleSource, stat: &dyn Statistic, pairs: u64, seed: u64, threshold: f64) -> Result<HoeffdingReport> {
    if pairs < MIN_PAIRS {
        return Err(Error::Config(format!("pair count must be at least {MIN_PAIRS}")));
    }
    source.validate()?;
    let sizes = source.sizes().to_vec();
    stat.check_layout(&sizes)?;
    let draws: Vec<Option<(f64, f64)>> = (0..pairs)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, p).rng();
            let pooled = source.pooled(&mut rng);
            let mut first = pooled.clone();
            first.shuffle(&mut rng);
            let mut second = pooled;
            second.shuffle(&mut rng);
            Some((stat.eval_pooled(&mut first, &sizes)?, stat.eval_pooled(&mut second, &sizes)?))
        })
        .collect();
    let defined: Vec<(f64, f64)> = draws.iter().flatten().copied().collect();
    let (max_discrepancy, grid) = max_discrepancy(&defined);
    Ok(HoeffdingReport {
        statistic: stat.name().to_string(),
        pairs,
        undefined_pairs: pairs - defined.len() as u64,
        grid,
        max_discrepancy,
        threshold,
        passes: max_discrepancy <= threshold,
    })
}
