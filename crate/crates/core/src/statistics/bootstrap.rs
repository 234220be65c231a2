//! Exact bootstrap distribution of the sample median.
//!
//! For a sorted sample `X_(1) <= .. <= X_(m)` the bootstrap median lands on
//! `X_(l)` with probability
//! `P(Bin(m, (l-1)/m) <= c) - P(Bin(m, l/m) <= c)` where `c = ceil(m/2) - 1`
//! (for odd `m`, `c = (m-1)/2`). The weights depend only on `m`, so they are
//! computed once per size and cached.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use statrs::function::factorial::ln_factorial;

/// Number of sample points at or below the lower median.
fn median_threshold(m: usize) -> usize {
    m.div_ceil(2) - 1
}

/// `P(Bin(m, p) <= c)` evaluated in log space.
fn binomial_cdf(m: usize, p: f64, c: usize) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if c >= m { 1.0 } else { 0.0 };
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let ln_m = ln_factorial(m as u64);
    let total: f64 = (0..=c.min(m))
        .map(|j| {
            let ln_choose = ln_m - ln_factorial(j as u64) - ln_factorial((m - j) as u64);
            (ln_choose + j as f64 * lp + (m - j) as f64 * lq).exp()
        })
        .sum();
    total.min(1.0)
}

fn compute_weights(m: usize) -> Vec<f64> {
    let c = median_threshold(m);
    let cdf: Vec<f64> = (0..=m).map(|l| binomial_cdf(m, l as f64 / m as f64, c)).collect();
    (1..=m).map(|l| (cdf[l - 1] - cdf[l]).max(0.0)).collect()
}

/// `P(theta(P*_m) = X_(l))` for `l = 1..=m`, indexed from zero.
pub fn median_atom_weights(m: usize) -> Arc<[f64]> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<[f64]>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(w) = cache.read().expect("weight cache poisoned").get(&m) {
        return Arc::clone(w);
    }
    let w: Arc<[f64]> = compute_weights(m).into();
    cache
        .write()
        .expect("weight cache poisoned")
        .entry(m)
        .or_insert(w)
        .clone()
}

/// The same atom probabilities in exact rational arithmetic.
pub fn median_atom_probabilities_exact(m: usize) -> Vec<BigRational> {
    assert!(m >= 1, "bootstrap weights need m >= 1");
    let c = median_threshold(m);
    let big_m = BigInt::from(m);
    let cdf = |l: usize| -> BigRational {
        // P(Bin(m, l/m) <= c) = sum_j C(m,j) l^j (m-l)^(m-j) / m^m
        let mut acc = BigInt::zero();
        let mut choose = BigInt::one();
        for j in 0..=c {
            if j > 0 {
                choose = choose * BigInt::from(m - j + 1) / BigInt::from(j);
            }
            acc += &choose * num_traits::pow(BigInt::from(l), j) * num_traits::pow(BigInt::from(m - l), m - j);
        }
        BigRational::new(acc, num_traits::pow(big_m.clone(), m))
    };
    let values: Vec<BigRational> = (0..=m).map(cdf).collect();
    (1..=m).map(|l| &values[l - 1] - &values[l]).collect()
}

/// Bootstrap estimate `m * sum_l (X_(l) - median)^2 * P(median* = X_(l))` on an
/// already sorted group. Estimates `1 / (4 f^2(theta))`.
pub fn median_variance_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    let med = sorted[median_threshold(m)];
    let weights = median_atom_weights(m);
    let s: f64 = sorted
        .iter()
        .zip(weights.iter())
        .map(|(&x, &w)| {
            let d = x - med;
            d * d * w
        })
        .sum();
    m as f64 * s
}
