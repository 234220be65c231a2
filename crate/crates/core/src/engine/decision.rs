use serde::{Deserialize, Serialize};

use super::distribution::PermutationDistribution;
use super::scheme::SchemeMode;
use crate::error::{Error, Result};
use crate::rational::{in_open_unit_interval, serde_ratio, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Reject,
    /// Reject with probability `a`.
    Randomize,
    Accept,
}

/// The randomized permutation test at level `alpha`: with
/// `k = M - floor(alpha M)`, reject when the observed statistic exceeds the
/// k-th smallest value `T^(k)`, reject with probability
/// `a = (alpha M - M+) / M0` on a tie, accept otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedDecision {
    #[serde(with = "crate::rational::serde_f64")]
    pub critical_value: f64,
    /// `M`, the number of evaluated assignments.
    pub total: u64,
    pub m_plus: u64,
    pub m_zero: u64,
    #[serde(with = "serde_ratio")]
    pub a: Rational,
    #[serde(with = "serde_ratio")]
    pub phi: Rational,
    pub outcome: Outcome,
}

impl RandomizedDecision {
    /// `(M+ + a M0) / M`, which equals `alpha` by construction.
    pub fn attained_level(&self) -> Rational {
        (Rational::from_integer(self.m_plus as i128) + self.a * Rational::from_integer(self.m_zero as i128))
            / Rational::from_integer(self.total as i128)
    }
}

pub fn check_alpha(alpha: &Rational) -> Result<()> {
    if in_open_unit_interval(alpha) {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

pub fn randomized_decision(dist: &PermutationDistribution, observed: f64, alpha: &Rational) -> Result<RandomizedDecision> {
    check_alpha(alpha)?;
    if dist.is_empty() {
        return Err(Error::Config("empty permutation distribution".into()));
    }
    let total = dist.len();
    let alpha_m = alpha * Rational::from_integer(total as i128);
    let k = total - alpha_m.floor().to_integer() as u64;
    let critical = dist.sorted_values()[(k - 1) as usize];
    let m_plus = dist.count_gt(critical);
    let m_zero = dist.count_le(critical) - dist.count_lt(critical);
    let a = (alpha_m - Rational::from_integer(m_plus as i128)) / Rational::from_integer(m_zero as i128);
    let (phi, outcome) = if observed > critical {
        (Rational::from_integer(1), Outcome::Reject)
    } else if observed == critical {
        (a, Outcome::Randomize)
    } else {
        (Rational::from_integer(0), Outcome::Accept)
    };
    Ok(RandomizedDecision { critical_value: critical, total, m_plus, m_zero, a, phi, outcome })
}

/// Exhaustive: weight of values `>= observed`. Sampled:
/// `(1 + #{permuted >= observed}) / (B + 1)` with the identity excluded from
/// the count.
pub fn p_value(dist: &PermutationDistribution, observed: f64) -> Rational {
    let total = dist.len() as i128;
    let at_least = dist.count_ge(observed) as i128;
    let count = match dist.scheme().mode {
        SchemeMode::Exhaustive => at_least,
        SchemeMode::Sampled => {
            let identity_counted = i128::from(dist.observed() >= observed);
            1 + at_least - identity_counted
        }
    };
    let p = Rational::new(count.min(total), total);
    debug_assert!(p.numer().is_positive() || count == 0);
    p
}
