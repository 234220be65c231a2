//! `W` evaluated on a random size-`s` subset of pooled k-sample data should
//! settle at the same constant as `W` on `s` i.i.d. draws from the mixture
//! `sum_j p_j P_j` with `p_j = n_j / N`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, RngStream};
use crate::error::{Error, Result};
use crate::statistics::{mean, unbiased_variance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SubsetStatistic {
    Mean,
    Variance,
    Constant(f64),
}

impl SubsetStatistic {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SubsetStatistic::Mean => mean(x),
            SubsetStatistic::Variance => unbiased_variance(x),
            SubsetStatistic::Constant(c) => *c,
        }
    }

    pub fn name(&self) -> String {
        match self {
            SubsetStatistic::Mean => "mean".into(),
            SubsetStatistic::Variance => "variance".into(),
            SubsetStatistic::Constant(c) => format!("constant({c})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub center: f64,
    pub spread: f64,
    pub se: f64,
}

fn summarize(v: &[f64]) -> Summary {
    let n = v.len() as f64;
    let center = v.iter().sum::<f64>() / n;
    let spread = if v.len() > 1 { (v.iter().map(|x| (x - center).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    Summary { center, spread, se: spread / n.sqrt() }
}

fn within(s: &Summary, target: f64) -> bool {
    (s.center - target).abs() <= 3.0 * s.se || s.center == target
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetReport {
    pub statistic: String,
    pub sizes: Vec<usize>,
    pub s: usize,
    pub replications: u64,
    pub subset: Summary,
    pub mixture: Summary,
    pub target: Option<f64>,
    pub passes: bool,
}

fn mixture_draw<R: Rng + ?Sized>(dists: &[DistributionSpec], sizes: &[usize], s: usize, rng: &mut R) -> Vec<f64> {
    let total: usize = sizes.iter().sum();
    (0..s)
        .map(|_| {
            let mut u = rng.random_range(0..total);
            let j = sizes.iter().position(|&n| {
                let hit = u < n;
                if !hit {
                    u -= n;
                }
                hit
            });
            dists[j.expect("index below total")].draw(rng)
        })
        .collect()
}

/// Without a target, passes when the two centers agree within three combined
/// standard errors; with one, each center must also be within three of its own.
pub fn random_subset_convergence_check(
    dists: &[DistributionSpec],
    sizes: &[usize],
    s: usize,
    w: SubsetStatistic,
    replications: u64,
    seed: u64,
    target: Option<f64>,
) -> Result<SubsetReport> {
    if dists.len() != sizes.len() {
        return Err(Error::Config("one distribution per group is required".into()));
    }
    crate::sample::validate_sizes(sizes)?;
    let total: usize = sizes.iter().sum();
    if s < 2 || s > total {
        return Err(Error::Config(format!("subset size must lie in [2, {total}]")));
    }
    if replications < 2 {
        return Err(Error::Config("need at least two replications".into()));
    }
    let (sub, mix): (Vec<f64>, Vec<f64>) = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, 2 * r).rng();
            let mut pooled: Vec<f64> = dists.iter().zip(sizes).flat_map(|(d, &n)| d.sample(n, &mut rng)).collect();
            let (subset, _) = pooled.partial_shuffle(&mut rng, s);
            let a = w.eval(subset);
            let b = w.eval(&mixture_draw(dists, sizes, s, &mut RngStream::new(seed, 2 * r + 1).rng()));
            (a, b)
        })
        .unzip();
    let subset = summarize(&sub);
    let mixture = summarize(&mix);
    let combined = (subset.se.powi(2) + mixture.se.powi(2)).sqrt();
    let agree = (subset.center - mixture.center).abs() <= 3.0 * combined;
    let passes = agree && target.is_none_or(|t| within(&subset, t) && within(&mixture, t));
    Ok(SubsetReport { statistic: w.name(), sizes: sizes.to_vec(), s, replications, subset, mixture, target, passes })
}
