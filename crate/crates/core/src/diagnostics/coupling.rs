//! The coupling of `Z` (fixed group sizes) with an i.i.d. sample `Zbar` from
//! the mixture `sum_j p_j P_j`, built so that the two agree everywhere except
//! at `D` positions after reordering `Zbar` by `pi0`.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DistributionSpec, RngStream};
use crate::error::{Error, Result};
use crate::sample::GroupedSample;
use crate::statistics::Statistic;

/// Where an entry of `Zbar` came from: the `index`-th draw from population
/// `population`. Indices below `n_population` reuse `X_{population, index}`;
/// larger ones are fresh draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub population: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingResult {
    pub z: GroupedSample,
    pub z_bar: Vec<f64>,
    pub provenance: Vec<Provenance>,
    /// `Zbar[pi0[i]]` is matched with `Z[i]`.
    pub pi0: Vec<usize>,
    /// Multinomial type counts `N_j` of `Zbar`.
    pub type_counts: Vec<usize>,
    /// Positions filled by a different mechanism than the matching `Z` entry.
    pub d: usize,
}

impl CouplingResult {
    /// `Zbar_{pi0}`, aligned position by position with `Z`.
    pub fn aligned(&self) -> Vec<f64> {
        self.pi0.iter().map(|&j| self.z_bar[j]).collect()
    }

    /// Positions `i` where `Zbar_{pi0(i)}` is not the reused `Z_i`.
    pub fn mismatches(&self) -> usize {
        let labels = self.z.labels();
        let mut within = vec![0usize; self.z.num_groups()];
        let mut count = 0;
        for (i, &g) in labels.iter().enumerate() {
            let p = self.provenance[self.pi0[i]];
            if p != (Provenance { population: g, index: within[g] }) {
                count += 1;
            }
            within[g] += 1;
        }
        count
    }

    /// Structural checks that hold on every realization.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n = self.z.total();
        let mut seen = vec![false; n];
        for &j in &self.pi0 {
            if j >= n || std::mem::replace(&mut seen[j], true) {
                return Err("pi0 is not a permutation".into());
            }
        }
        let excess: usize = self
            .type_counts
            .iter()
            .zip(self.z.sizes())
            .map(|(&c, &s)| c.saturating_sub(s))
            .sum();
        if excess != self.d {
            return Err(format!("D = {} but sum of excess counts is {excess}", self.d));
        }
        if self.mismatches() != self.d {
            return Err(format!("D = {} but {} positions differ", self.d, self.mismatches()));
        }
        if self.z.num_groups() == 2 && self.d != self.type_counts[0].abs_diff(self.z.sizes()[0]) {
            return Err("D != |N_1 - n_1|".into());
        }
        let aligned = self.aligned();
        let labels = self.z.labels();
        let mut within = vec![0usize; self.z.num_groups()];
        for (i, &g) in labels.iter().enumerate() {
            let p = self.provenance[self.pi0[i]];
            if p.population == g && p.index == within[g] && aligned[i] != self.z.values()[i] {
                return Err(format!("reused observation at {i} does not match Z"));
            }
            within[g] += 1;
        }
        Ok(())
    }
}

fn check_probabilities(p: &[f64], k: usize) -> Result<()> {
    if p.len() != k {
        return Err(Error::Config(format!("need {k} probabilities, got {}", p.len())));
    }
    if p.iter().any(|&x| x.is_nan() || x <= 0.0 || !x.is_finite()) {
        return Err(Error::Config("mixture probabilities must be strictly positive".into()));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config("mixture probabilities must sum to 1".into()));
    }
    Ok(())
}

fn pick<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &pj) in p.iter().enumerate() {
        acc += pj;
        if u < acc {
            return j;
        }
    }
    p.len() - 1
}

/// Builds `Z` from `dists` with the given sizes, then `Zbar` by the two-stage
/// fill-in process, then `pi0` by the slot-filling rule.
pub fn couple<R: Rng + ?Sized>(sizes: &[usize], p: &[f64], dists: &[DistributionSpec], rng: &mut R) -> Result<CouplingResult> {
    let k = sizes.len();
    check_probabilities(p, k)?;
    if dists.len() != k {
        return Err(Error::Config(format!("need {k} distributions, got {}", dists.len())));
    }
    let values: Vec<f64> = sizes.iter().zip(dists).flat_map(|(&n, d)| d.sample(n, rng)).collect();
    let z = GroupedSample::new(values, sizes.to_vec())?;
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &n| {
            let s = *acc;
            *acc += n;
            Some(s)
        })
        .collect();
    let total = z.total();

    let mut used = vec![0usize; k];
    let mut z_bar = Vec::with_capacity(total);
    let mut provenance = Vec::with_capacity(total);
    for _ in 0..total {
        let j = pick(p, rng);
        let index = used[j];
        let value = if index < sizes[j] { z.values()[offsets[j] + index] } else { dists[j].draw(rng) };
        used[j] += 1;
        z_bar.push(value);
        provenance.push(Provenance { population: j, index });
    }

    // Source-j draws fill source-j slots in order; the excess waits and then
    // fills the empty slots, oldest draw first.
    let mut slots: Vec<Option<usize>> = vec![None; total];
    let mut set_aside = Vec::new();
    for (i, pr) in provenance.iter().enumerate() {
        if pr.index < sizes[pr.population] {
            slots[offsets[pr.population] + pr.index] = Some(i);
        } else {
            set_aside.push(i);
        }
    }
    let d = set_aside.len();
    let mut leftovers = set_aside.into_iter();
    let pi0 = slots
        .into_iter()
        .map(|s| s.unwrap_or_else(|| leftovers.next().expect("slot and leftover counts agree")))
        .collect();

    Ok(CouplingResult { z, z_bar, provenance, pi0, type_counts: used, d })
}

/// `T(Zbar_{pi pi0}) - T(Z_pi)` for one coupling and one uniform `pi`, with
/// `p_j = n_j / N`. Returns the gap and the realized `D`.
pub fn coupling_statistic_gap<R: Rng + ?Sized>(
    sizes: &[usize],
    dists: &[DistributionSpec],
    stat: &dyn Statistic,
    rng: &mut R,
) -> Result<(f64, usize)> {
    stat.check_layout(sizes)?;
    let total: usize = sizes.iter().sum();
    let p: Vec<f64> = sizes.iter().map(|&n| n as f64 / total as f64).collect();
    let c = couple(sizes, &p, dists, rng)?;
    let aligned = c.aligned();
    let mut pi: Vec<usize> = (0..total).collect();
    pi.shuffle(rng);
    let mut a: Vec<f64> = pi.iter().map(|&i| aligned[i]).collect();
    let mut b: Vec<f64> = pi.iter().map(|&i| c.z.values()[i]).collect();
    let undefined = || Error::StatisticUndefined { statistic: stat.name().to_string(), assignment: pi.clone() };
    let ta = stat.eval_pooled(&mut a, sizes).ok_or_else(undefined)?;
    let tb = stat.eval_pooled(&mut b, sizes).ok_or_else(undefined)?;
    Ok((ta - tb, c.d))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingBoundReport {
    pub sizes: Vec<usize>,
    pub runs: u64,
    pub mean_d_over_n: f64,
    pub se: f64,
    /// `N^{-1/2}`.
    pub bound: f64,
    /// Runs violating a structural invariant (should be zero).
    pub invariant_failures: u64,
    pub passes: bool,
}

/// Monte Carlo estimate of `E(D/N)` against `N^{-1/2}`, with `p_j = n_j / N`.
/// Passes when the estimate minus three standard errors stays under the
/// bound and every realization satisfies the structural invariants.
pub fn coupling_bound_check(sizes: &[usize], runs: u64, seed: u64) -> Result<CouplingBoundReport> {
    let total: usize = sizes.iter().sum();
    let p: Vec<f64> = sizes.iter().map(|&n| n as f64 / total as f64).collect();
    coupling_bound_check_with(sizes, &p, runs, seed)
}

/// As [`coupling_bound_check`] with arbitrary mixture probabilities.
pub fn coupling_bound_check_with(sizes: &[usize], p: &[f64], runs: u64, seed: u64) -> Result<CouplingBoundReport> {
    check_probabilities(p, sizes.len())?;
    if runs == 0 {
        return Err(Error::Config("runs must be positive".into()));
    }
    let total: usize = sizes.iter().sum();
    let dists = vec![DistributionSpec::normal(0.0, 1.0)?; sizes.len()];
    let draws: Vec<(f64, bool)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, r).rng();
            let c = couple(sizes, p, &dists, &mut rng)?;
            Ok((c.d as f64 / total as f64, c.check_invariants().is_ok()))
        })
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    let bound = (total as f64).powf(-0.5);
    let invariant_failures = draws.iter().filter(|d| !d.1).count() as u64;
    Ok(CouplingBoundReport {
        sizes: sizes.to_vec(),
        runs,
        mean_d_over_n: mean,
        se,
        bound,
        invariant_failures,
        passes: invariant_failures == 0 && mean - 3.0 * se <= bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub sizes: Vec<usize>,
    pub runs: u64,
    pub gap_mean: f64,
    pub gap_variance: f64,
    pub mean_d: f64,
    /// `N / min(n_i)^2 * 2 max Var * N^{1/2}`.
    pub bound: f64,
    pub passes: bool,
}

/// Empirical variance of the coupling gap for a statistic across runs.
pub fn coupling_gap_check(sizes: &[usize], dists: &[DistributionSpec], stat: &dyn Statistic, runs: u64, seed: u64) -> Result<GapReport> {
    let draws: Vec<(f64, usize)> = (0..runs)
        .into_par_iter()
        .map(|r| coupling_statistic_gap(sizes, dists, stat, &mut RngStream::new(seed, r).rng()))
        .collect::<Result<_>>()?;
    let n = runs as f64;
    let mean = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let total = sizes.iter().sum::<usize>() as f64;
    let min = *sizes.iter().min().expect("sizes nonempty") as f64;
    let max_var = dists.iter().map(|d| d.variance()).fold(0.0, f64::max);
    let bound = total / (min * min) * 2.0 * max_var * total.sqrt();
    Ok(GapReport {
        sizes: sizes.to_vec(),
        runs,
        gap_mean: mean,
        gap_variance: var,
        mean_d: draws.iter().map(|d| d.1 as f64).sum::<f64>() / n,
        bound,
        passes: var <= bound,
    })
}
