//! Likelihood ratio of the multivariate hypergeometric law to the multinomial
//! law of type counts, and its chi-squared limit.
//!
//! With `p_i = n_i / N` and `s / N -> theta`,
//! `L(M) -> (1 - theta)^{-(k-1)/2} exp(-theta / (2 (1 - theta)) chi2_{k-1})`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand_distr::{ChiSquared, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::ks::two_sample_distance;
use crate::distributions::{multinomial_draw, RngStream};
use crate::error::{Error, Result};

fn check_counts(m: &[u64], s: u64, sizes: &[u64]) -> Result<u64> {
    if m.len() != sizes.len() {
        return Err(Error::Config("counts and sizes differ in length".into()));
    }
    if m.iter().sum::<u64>() != s {
        return Err(Error::Config(format!("counts {m:?} do not sum to s = {s}")));
    }
    let total: u64 = sizes.iter().sum();
    if s > total {
        return Err(Error::Config(format!("s = {s} exceeds N = {total}")));
    }
    Ok(total)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `ln L(M)`; `-inf` when some `M_i > n_i`.
pub fn log_likelihood_ratio(m: &[u64], s: u64, sizes: &[u64]) -> Result<f64> {
    let total = check_counts(m, s, sizes)?;
    if m.iter().zip(sizes).any(|(mi, ni)| mi > ni) {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_q: f64 = m.iter().zip(sizes).map(|(&mi, &ni)| ln_choose(ni, mi)).sum::<f64>() - ln_choose(total, s);
    let ln_n = (total as f64).ln();
    let ln_p: f64 = ln_factorial(s)
        + m.iter()
            .zip(sizes)
            .map(|(&mi, &ni)| -ln_factorial(mi) + if mi == 0 { 0.0 } else { mi as f64 * ((ni as f64).ln() - ln_n) })
            .sum::<f64>();
    Ok(ln_q - ln_p)
}

/// `L(M) = Q(M) / P(M)` computed in log space.
pub fn likelihood_ratio(m: &[u64], s: u64, sizes: &[u64]) -> Result<f64> {
    Ok(log_likelihood_ratio(m, s, sizes)?.exp())
}

fn big_factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn big_choose(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    big_factorial(n) / (big_factorial(k) * big_factorial(n - k))
}

/// Multinomial pmf with `p_i = n_i / N`, exactly.
pub fn multinomial_pmf_exact(m: &[u64], s: u64, sizes: &[u64]) -> Result<BigRational> {
    let total = check_counts(m, s, sizes)?;
    let mut numer = big_factorial(s);
    let mut denom = BigInt::one();
    for (&mi, &ni) in m.iter().zip(sizes) {
        numer *= num_traits::pow(BigInt::from(ni), mi as usize);
        denom *= big_factorial(mi);
    }
    denom *= num_traits::pow(BigInt::from(total), s as usize);
    Ok(BigRational::new(numer, denom))
}

/// Multivariate hypergeometric pmf, exactly.
pub fn hypergeometric_pmf_exact(m: &[u64], s: u64, sizes: &[u64]) -> Result<BigRational> {
    let total = check_counts(m, s, sizes)?;
    let numer = m.iter().zip(sizes).fold(BigInt::one(), |acc, (&mi, &ni)| acc * big_choose(ni, mi));
    Ok(BigRational::new(numer, big_choose(total, s)))
}

pub fn likelihood_ratio_exact(m: &[u64], s: u64, sizes: &[u64]) -> Result<BigRational> {
    Ok(hypergeometric_pmf_exact(m, s, sizes)? / multinomial_pmf_exact(m, s, sizes)?)
}

/// Every count vector of length `k` summing to `s`.
pub fn compositions(s: u64, k: usize) -> Vec<Vec<u64>> {
    if k == 1 {
        return vec![vec![s]];
    }
    (0..=s)
        .flat_map(|first| {
            compositions(s - first, k - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

/// `E_P[L(M)] = sum_M P(M) L(M)` by full enumeration; exactly 1.
pub fn expected_ratio_exact(s: u64, sizes: &[u64]) -> Result<BigRational> {
    compositions(s, sizes.len()).iter().try_fold(BigRational::zero(), |acc, m| {
        Ok(acc + multinomial_pmf_exact(m, s, sizes)? * likelihood_ratio_exact(m, s, sizes)?)
    })
}

/// One multinomial draw with its likelihood ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContiguityDraw {
    pub counts: Vec<u64>,
    pub l: f64,
    #[serde(with = "crate::rational::serde_f64")]
    pub log_l: f64,
}

pub fn contiguity_draw(s: u64, sizes: &[u64], stream: &RngStream) -> Result<ContiguityDraw> {
    let total: u64 = sizes.iter().sum();
    let probs: Vec<f64> = sizes.iter().map(|&n| n as f64 / total as f64).collect();
    let counts = multinomial_draw(s, &probs, &mut stream.rng());
    let log_l = log_likelihood_ratio(&counts, s, sizes)?;
    Ok(ContiguityDraw { counts, l: log_l.exp(), log_l })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContiguityReport {
    pub sizes: Vec<u64>,
    pub s: u64,
    pub theta: f64,
    pub replications: u64,
    pub reference_draws: u64,
    pub mean_l: f64,
    pub se_l: f64,
    /// Two-sample KS distance between `ln L` draws and limit-law draws.
    pub ks_distance: f64,
    pub mean_tolerance: f64,
    pub ks_threshold: f64,
    pub passes: bool,
}

/// Draws `M` from the multinomial, evaluates `L`, and compares `ln L` with
/// `ln` of the limit law simulated from chi-squared variates.
pub fn contiguity_limit_check(sizes: &[u64], s: u64, replications: u64, reference_draws: u64, seed: u64) -> Result<ContiguityReport> {
    let k = sizes.len();
    if k < 2 || sizes.contains(&0) {
        return Err(Error::Config("need at least two nonempty types".into()));
    }
    let total: u64 = sizes.iter().sum();
    if s >= total {
        return Err(Error::Config("s / N must lie in [0, 1)".into()));
    }
    if replications == 0 || reference_draws == 0 {
        return Err(Error::Config("replication counts must be positive".into()));
    }
    let theta = s as f64 / total as f64;
    let draws: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| contiguity_draw(s, sizes, &RngStream::new(seed, 2 * r)).map(|d| d.log_l))
        .collect::<Result<_>>()?;
    let shift = -((k - 1) as f64) / 2.0 * (1.0 - theta).ln();
    let slope = theta / (2.0 * (1.0 - theta));
    let chi2 = ChiSquared::new((k - 1) as f64).expect("positive degrees of freedom");
    let reference: Vec<f64> = (0..reference_draws)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed, 2 * r + 1).rng();
            shift - slope * chi2.sample(&mut rng)
        })
        .collect();

    let ls: Vec<f64> = draws.iter().map(|v| v.exp()).collect();
    let n = replications as f64;
    let mean_l = ls.iter().sum::<f64>() / n;
    let var = ls.iter().map(|v| (v - mean_l).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let se_l = (var / n).sqrt();
    let ks_distance = two_sample_distance(&draws, &reference);
    let (mean_tolerance, ks_threshold) = (0.05, 0.05);
    Ok(ContiguityReport {
        sizes: sizes.to_vec(),
        s,
        theta,
        replications,
        reference_draws,
        mean_l,
        se_l,
        ks_distance,
        mean_tolerance,
        ks_threshold,
        passes: (mean_l - 1.0).abs() <= mean_tolerance && ks_distance <= ks_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_single_draws() {
        assert_eq!(likelihood_ratio(&[0, 0], 0, &[3, 5]).unwrap(), 1.0);
        for m in [[1, 0, 0], [0, 1, 0], [0, 0, 1]] {
            assert!((likelihood_ratio(&m, 1, &[2, 3, 7]).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(likelihood_ratio_exact(&m, 1, &[2, 3, 7]).unwrap(), BigRational::one());
        }
    }

    #[test]
    fn outside_support_is_zero() {
        assert_eq!(likelihood_ratio(&[4, 0], 4, &[3, 3]).unwrap(), 0.0);
        assert!(likelihood_ratio_exact(&[4, 0], 4, &[3, 3]).unwrap().is_zero());
        assert!(likelihood_ratio(&[3, 1], 4, &[3, 3]).unwrap() > 0.0);
    }

    #[test]
    fn exact_expectation_is_one() {
        assert_eq!(expected_ratio_exact(3, &[3, 3]).unwrap(), BigRational::one());
        assert_eq!(expected_ratio_exact(5, &[2, 4, 3]).unwrap(), BigRational::one());
    }

    #[test]
    fn float_matches_exact() {
        use num_traits::ToPrimitive;
        for m in compositions(4, 3) {
            let a = likelihood_ratio(&m, 4, &[3, 4, 5]).unwrap();
            let b = likelihood_ratio_exact(&m, 4, &[3, 4, 5]).unwrap().to_f64().unwrap();
            assert!((a - b).abs() < 1e-12 * b.max(1.0), "{m:?}");
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(likelihood_ratio(&[1, 1], 3, &[3, 3]).is_err());
        assert!(likelihood_ratio(&[4, 4], 8, &[3, 3]).is_err());
    }

    #[test]
    fn theta_zero_regime() {
        let r = contiguity_limit_check(&[400, 600], 0, 200, 200, 1).unwrap();
        assert_eq!(r.mean_l, 1.0);
        assert_eq!(r.ks_distance, 0.0);
        assert!(r.passes);
    }
}
