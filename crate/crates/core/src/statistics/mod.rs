//! Test statistics: raw and studentized two-sample differences of means,
//! medians and variances, and the k-sample studentized quadratic form.
//!
//! Every built-in statistic sorts each group before computing anything, so
//! the value depends on group contents only and is bit-identical under any
//! within-group reordering. The permutation engine relies on this when it
//! enumerates group assignments instead of raw permutations.

mod bootstrap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{group_slices, group_slices_mut, GroupedSample};

pub use bootstrap::{median_atom_probabilities_exact, median_atom_weights, median_variance_sorted};

/// A real-valued statistic of grouped data.
pub trait Statistic: Send + Sync {
    fn name(&self) -> &str;

    /// Rejects group layouts the statistic cannot handle.
    fn check_layout(&self, sizes: &[usize]) -> Result<()> {
        let _ = sizes;
        Ok(())
    }

    /// Evaluates on pooled values laid out group by group. Implementations may
    /// reorder values inside a group. `None` means the statistic is undefined
    /// on this data (e.g. a zero studentizing denominator).
    fn eval_pooled(&self, pooled: &mut [f64], sizes: &[usize]) -> Option<f64>;

    fn evaluate(&self, sample: &GroupedSample) -> Result<f64> {
        self.check_layout(sample.sizes())?;
        let mut buf = sample.values().to_vec();
        self.eval_pooled(&mut buf, sample.sizes())
            .ok_or_else(|| Error::StatisticUndefined {
                statistic: self.name().to_string(),
                assignment: Vec::new(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StatisticKind {
    TwoSampleRaw,
    TwoSampleStudentized,
    KSampleQuadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parameter {
    Mean,
    Median,
    Variance,
}

/// A named built-in statistic. The names are the CLI contract.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "String")]
pub struct StatisticDescriptor {
    name: &'static str,
    kind: StatisticKind,
    parameter: Parameter,
}

const REGISTRY: &[(&str, StatisticKind, Parameter)] = &[
    ("mean", StatisticKind::TwoSampleRaw, Parameter::Mean),
    ("mean_t", StatisticKind::TwoSampleStudentized, Parameter::Mean),
    ("median", StatisticKind::TwoSampleRaw, Parameter::Median),
    ("median_t", StatisticKind::TwoSampleStudentized, Parameter::Median),
    ("var_t", StatisticKind::TwoSampleStudentized, Parameter::Variance),
    ("ksample_mean_t", StatisticKind::KSampleQuadratic, Parameter::Mean),
    ("ksample_median_t", StatisticKind::KSampleQuadratic, Parameter::Median),
];

impl StatisticDescriptor {
    pub fn names() -> impl Iterator<Item = &'static str> {
        REGISTRY.iter().map(|r| r.0)
    }

    pub fn from_name(name: &str) -> Result<Self> {
        REGISTRY
            .iter()
            .find(|r| r.0 == name)
            .map(|&(name, kind, parameter)| Self { name, kind, parameter })
            .ok_or_else(|| {
                let known: Vec<_> = Self::names().collect();
                Error::Config(format!("unknown statistic `{name}` (known: {})", known.join(", ")))
            })
    }

    pub fn kind(&self) -> StatisticKind {
        self.kind
    }

    pub fn parameter(&self) -> Parameter {
        self.parameter
    }

    pub fn is_studentized(&self) -> bool {
        self.kind != StatisticKind::TwoSampleRaw
    }
}

impl FromStr for StatisticDescriptor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s)
    }
}

impl TryFrom<String> for StatisticDescriptor {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::from_name(&s)
    }
}

impl<'de> Deserialize<'de> for StatisticDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Self::from_name(&name).map_err(serde::de::Error::custom)
    }
}

impl From<StatisticDescriptor> for String {
    fn from(d: StatisticDescriptor) -> String {
        d.name.to_string()
    }
}

impl fmt::Display for StatisticDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name)
    }
}

impl Statistic for StatisticDescriptor {
    fn name(&self) -> &str {
        self.name
    }

    fn check_layout(&self, sizes: &[usize]) -> Result<()> {
        crate::sample::validate_sizes(sizes)?;
        let k = sizes.len();
        if self.kind != StatisticKind::KSampleQuadratic && k != 2 {
            return Err(Error::Config(format!(
                "`{}` is a two-sample statistic but the data has {k} groups",
                self.name
            )));
        }
        let min_size = match (self.kind, self.parameter) {
            (StatisticKind::TwoSampleRaw, _) => 1,
            (_, Parameter::Mean | Parameter::Variance) => 2,
            (_, Parameter::Median) => 1,
        };
        if let Some(&small) = sizes.iter().find(|&&n| n < min_size) {
            return Err(Error::Config(format!(
                "`{}` needs every group to have at least {min_size} observations, got {small}",
                self.name
            )));
        }
        Ok(())
    }

    fn eval_pooled(&self, pooled: &mut [f64], sizes: &[usize]) -> Option<f64> {
        sort_groups(pooled, sizes);
        let value = match (self.kind, self.parameter) {
            (StatisticKind::TwoSampleRaw, p) => raw_difference_sorted(pooled, sizes, p),
            (StatisticKind::TwoSampleStudentized, Parameter::Mean) => mean_t_sorted(pooled, sizes)?,
            (StatisticKind::TwoSampleStudentized, Parameter::Median) => median_t_sorted(pooled, sizes)?,
            (StatisticKind::TwoSampleStudentized, Parameter::Variance) => var_t_sorted(pooled, sizes)?,
            (StatisticKind::KSampleQuadratic, p) => quadratic_sorted(pooled, sizes, p, Weighting::Estimated)?,
        };
        value.is_finite().then_some(value)
    }
}

/// Sorts each group ascending in place.
pub fn sort_groups(pooled: &mut [f64], sizes: &[usize]) {
    for g in group_slices_mut(pooled, sizes) {
        g.sort_unstable_by(f64::total_cmp);
    }
}

fn sorted_copy(sample: &GroupedSample) -> Vec<f64> {
    let mut buf = sample.values().to_vec();
    sort_groups(&mut buf, sample.sizes());
    buf
}

fn two_groups<'a>(pooled: &'a [f64], sizes: &'a [usize]) -> (&'a [f64], &'a [f64]) {
    pooled.split_at(sizes[0])
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub(crate) fn unbiased_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Second and fourth central moments with `1/n` denominators.
fn central_moments(x: &[f64]) -> (f64, f64) {
    let m = mean(x);
    let n = x.len() as f64;
    let (s2, s4) = x.iter().fold((0.0, 0.0), |(a, b), v| {
        let d2 = (v - m) * (v - m);
        (a + d2, b + d2 * d2)
    });
    (s2 / n, s4 / n)
}

/// Lower median of a sorted slice, `X_(ceil(m/2))`.
pub(crate) fn median_sorted(x: &[f64]) -> f64 {
    x[x.len().div_ceil(2) - 1]
}

fn parameter_estimate(sorted: &[f64], parameter: Parameter) -> f64 {
    match parameter {
        Parameter::Mean => mean(sorted),
        Parameter::Median => median_sorted(sorted),
        Parameter::Variance => central_moments(sorted).0,
    }
}

/// Influence-function variance estimate used for studentization.
fn parameter_variance(sorted: &[f64], parameter: Parameter) -> f64 {
    match parameter {
        Parameter::Mean => unbiased_variance(sorted),
        Parameter::Median => median_variance_sorted(sorted),
        Parameter::Variance => {
            let (m2, m4) = central_moments(sorted);
            (m4 - m2 * m2).max(0.0)
        }
    }
}

fn raw_difference_sorted(pooled: &[f64], sizes: &[usize], parameter: Parameter) -> f64 {
    let (x, y) = two_groups(pooled, sizes);
    let n = pooled.len() as f64;
    n.sqrt() * (parameter_estimate(x, parameter) - parameter_estimate(y, parameter))
}

fn mean_t_sorted(pooled: &[f64], sizes: &[usize]) -> Option<f64> {
    let (x, y) = two_groups(pooled, sizes);
    let (m, n, total) = (x.len() as f64, y.len() as f64, pooled.len() as f64);
    let (sx, sy) = (unbiased_variance(x), unbiased_variance(y));
    let denom = (total * sx / m + total * sy / n).sqrt();
    (denom > 0.0).then(|| total.sqrt() * (mean(x) - mean(y)) / denom)
}

fn median_t_sorted(pooled: &[f64], sizes: &[usize]) -> Option<f64> {
    let (x, y) = two_groups(pooled, sizes);
    let (m, n, total) = (x.len() as f64, y.len() as f64, pooled.len() as f64);
    let v2 = total / m * median_variance_sorted(x) + total / n * median_variance_sorted(y);
    (v2 > 0.0).then(|| total.sqrt() * (median_sorted(x) - median_sorted(y)) / v2.sqrt())
}

fn var_t_sorted(pooled: &[f64], sizes: &[usize]) -> Option<f64> {
    let (x, y) = two_groups(pooled, sizes);
    let (m, n, total) = (x.len() as f64, y.len() as f64, pooled.len() as f64);
    let (x2, x4) = central_moments(x);
    let (y2, y4) = central_moments(y);
    let v2 = total / m * (x4 - x2 * x2) + total / n * (y4 - y2 * y2);
    (v2 > 0.0).then(|| total.sqrt() * (x2 - y2) / v2.sqrt())
}

enum Weighting<'a> {
    Estimated,
    Known(&'a [f64]),
    Unit,
}

fn quadratic_sorted(pooled: &[f64], sizes: &[usize], parameter: Parameter, weighting: Weighting<'_>) -> Option<f64> {
    let mut estimates = Vec::with_capacity(sizes.len());
    let mut weights = Vec::with_capacity(sizes.len());
    for (i, g) in group_slices(pooled, sizes).enumerate() {
        let var = match weighting {
            Weighting::Estimated => parameter_variance(g, parameter),
            Weighting::Known(v) => v[i],
            Weighting::Unit => 1.0,
        };
        if var <= 0.0 || var.is_nan() {
            return None;
        }
        estimates.push(parameter_estimate(g, parameter));
        weights.push(g.len() as f64 / var);
    }
    let total_weight: f64 = weights.iter().sum();
    let center = estimates.iter().zip(&weights).map(|(t, w)| t * w).sum::<f64>() / total_weight;
    Some(
        estimates
            .iter()
            .zip(&weights)
            .map(|(t, w)| w * (t - center) * (t - center))
            .sum(),
    )
}

fn require_two(sample: &GroupedSample, min: usize, what: &str) -> Result<()> {
    if sample.num_groups() != 2 {
        return Err(Error::Config(format!("{what} needs exactly two groups")));
    }
    if sample.sizes().iter().any(|&n| n < min) {
        return Err(Error::Config(format!("{what} needs at least {min} observations per group")));
    }
    Ok(())
}

fn undefined(name: &str) -> Error {
    Error::StatisticUndefined { statistic: name.to_string(), assignment: Vec::new() }
}

/// `sqrt(N) * (mean(X) - mean(Y))`.
pub fn mean_diff(sample: &GroupedSample) -> Result<f64> {
    require_two(sample, 1, "mean_diff")?;
    Ok(raw_difference_sorted(&sorted_copy(sample), sample.sizes(), Parameter::Mean))
}

/// `sqrt(N)(mean(X) - mean(Y)) / sqrt(N S_X^2/m + N S_Y^2/n)` with `n - 1`
/// sample variances.
pub fn mean_diff_studentized(sample: &GroupedSample) -> Result<f64> {
    require_two(sample, 2, "mean_diff_studentized")?;
    mean_t_sorted(&sorted_copy(sample), sample.sizes()).ok_or_else(|| undefined("mean_t"))
}

/// `sqrt(N) * (median(X) - median(Y))` with lower medians.
pub fn median_diff(sample: &GroupedSample) -> Result<f64> {
    require_two(sample, 1, "median_diff")?;
    Ok(raw_difference_sorted(&sorted_copy(sample), sample.sizes(), Parameter::Median))
}

/// Bootstrap estimate of `1 / (4 f^2(theta))` for one group.
pub fn bootstrap_median_variance(group: &[f64]) -> Result<f64> {
    if group.is_empty() {
        return Err(Error::InvalidSample("empty group".into()));
    }
    let mut sorted = group.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(median_variance_sorted(&sorted))
}

/// Studentized median difference, `v^2 = (N/m) w_X^2 + (N/n) w_Y^2` from the
/// per-group bootstrap estimates.
pub fn median_diff_studentized(sample: &GroupedSample) -> Result<f64> {
    require_two(sample, 1, "median_diff_studentized")?;
    median_t_sorted(&sorted_copy(sample), sample.sizes()).ok_or_else(|| undefined("median_t"))
}

/// Studentized difference of (1/m) variances with a fourth-moment standard error.
pub fn variance_diff_studentized(sample: &GroupedSample) -> Result<f64> {
    require_two(sample, 2, "variance_diff_studentized")?;
    var_t_sorted(&sorted_copy(sample), sample.sizes()).ok_or_else(|| undefined("var_t"))
}

/// `T_{n,1} = sum_i (n_i / s_i^2) (theta_i - weighted mean)^2` with estimated
/// variances, or unit weights when `studentized` is false.
pub fn ksample_quadratic(sample: &GroupedSample, parameter: Parameter, studentized: bool) -> Result<f64> {
    let weighting = if studentized { Weighting::Estimated } else { Weighting::Unit };
    if studentized && parameter != Parameter::Median && sample.sizes().iter().any(|&n| n < 2) {
        return Err(Error::Config("studentized k-sample statistic needs n_i >= 2".into()));
    }
    quadratic_sorted(&sorted_copy(sample), sample.sizes(), parameter, weighting)
        .ok_or_else(|| undefined("ksample_quadratic"))
}

/// `T_{n,0}`: the quadratic form with the true variances supplied.
pub fn ksample_quadratic_known(sample: &GroupedSample, parameter: Parameter, variances: &[f64]) -> Result<f64> {
    if variances.len() != sample.num_groups() {
        return Err(Error::Config("one variance per group required".into()));
    }
    quadratic_sorted(&sorted_copy(sample), sample.sizes(), parameter, Weighting::Known(variances))
        .ok_or_else(|| undefined("ksample_quadratic_known"))
}

/// Uses `|T|` so that an upper-tail test becomes two-sided.
#[derive(Debug, Clone)]
pub struct Absolute<S>(pub S);

impl<S: Statistic> Statistic for Absolute<S> {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn check_layout(&self, sizes: &[usize]) -> Result<()> {
        self.0.check_layout(sizes)
    }
    fn eval_pooled(&self, pooled: &mut [f64], sizes: &[usize]) -> Option<f64> {
        self.0.eval_pooled(pooled, sizes).map(f64::abs)
    }
}

/// `N^{-1/2} * sum of all observations`. Invariant under every permutation of
/// the pooled data, so its permutation distribution is a point mass.
#[derive(Debug, Clone, Copy, Default)]
pub struct PooledSum;

impl Statistic for PooledSum {
    fn name(&self) -> &str {
        "pooled_sum"
    }
    fn eval_pooled(&self, pooled: &mut [f64], _sizes: &[usize]) -> Option<f64> {
        pooled.sort_unstable_by(f64::total_cmp);
        Some(pooled.iter().sum::<f64>() / (pooled.len() as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Statistic for Constant {
    fn name(&self) -> &str {
        "constant"
    }
    fn eval_pooled(&self, _pooled: &mut [f64], _sizes: &[usize]) -> Option<f64> {
        Some(self.0)
    }
}

/// `T_{n,0}` as an engine statistic.
#[derive(Debug, Clone)]
pub struct KnownVarianceQuadratic {
    pub parameter: Parameter,
    pub variances: Vec<f64>,
}

impl Statistic for KnownVarianceQuadratic {
    fn name(&self) -> &str {
        "ksample_known_variance"
    }
    fn check_layout(&self, sizes: &[usize]) -> Result<()> {
        if sizes.len() != self.variances.len() {
            return Err(Error::Config("one variance per group required".into()));
        }
        Ok(())
    }
    fn eval_pooled(&self, pooled: &mut [f64], sizes: &[usize]) -> Option<f64> {
        sort_groups(pooled, sizes);
        quadratic_sorted(pooled, sizes, self.parameter, Weighting::Known(&self.variances))
    }
}
