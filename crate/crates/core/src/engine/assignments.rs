//! Group assignments: partitions of the pooled positions into ordered groups
//! of fixed sizes. Each one stands for `prod n_i!` raw permutations.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::scheme::PermutationScheme;
use crate::error::{Error, Result};
use crate::sample::GroupedSample;

/// Pooled positions listed group by group: slot `i` of the regrouped data
/// holds `Z[order[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    order: Vec<usize>,
}

impl Assignment {
    pub fn identity(n: usize) -> Self {
        Self { order: (0..n).collect() }
    }

    pub fn from_order(order: Vec<usize>) -> Self {
        Self { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    /// Writes the regrouped values into `buf`.
    pub fn apply_into(&self, values: &[f64], buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.order.iter().map(|&i| values[i]));
    }

    /// Group label of each original position under this assignment.
    pub fn labels(&self, sizes: &[usize]) -> Vec<usize> {
        let mut labels = vec![0; self.order.len()];
        let mut slot = 0;
        for (g, &n) in sizes.iter().enumerate() {
            for &pos in &self.order[slot..slot + n] {
                labels[pos] = g;
            }
            slot += n;
        }
        labels
    }
}

/// Multinomial coefficient `N! / (n_1! ... n_k!)`, saturating at `u128::MAX`.
pub fn count_assignments(sizes: &[usize]) -> u128 {
    let mut total: u128 = 1;
    let mut placed: u128 = 0;
    for &n in sizes {
        for j in 1..=n as u128 {
            placed += 1;
            // total * placed / j stays integral: it is a running binomial product.
            let Some(num) = total.checked_mul(placed) else {
                return u128::MAX;
            };
            total = num / j;
        }
    }
    total
}

/// Iterator over every distinct assignment, starting with the identity, in
/// lexicographic order of the position-label vector.
pub struct AssignmentIter {
    labels: Vec<usize>,
    sizes: Vec<usize>,
    done: bool,
}

impl AssignmentIter {
    fn order_from_labels(&self) -> Vec<usize> {
        let mut offsets: Vec<usize> = self
            .sizes
            .iter()
            .scan(0, |acc, &n| {
                let start = *acc;
                *acc += n;
                Some(start)
            })
            .collect();
        let mut order = vec![0; self.labels.len()];
        for (pos, &g) in self.labels.iter().enumerate() {
            order[offsets[g]] = pos;
            offsets[g] += 1;
        }
        order
    }
}

/// Advances to the next lexicographic arrangement; false when wrapped.
fn next_arrangement(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl Iterator for AssignmentIter {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        if self.done {
            return None;
        }
        let current = Assignment { order: self.order_from_labels() };
        self.done = !next_arrangement(&mut self.labels);
        Some(current)
    }
}

/// Every distinct group assignment, each exactly once. Fails with
/// [`Error::CapExceeded`] when there are more than `cap` of them.
pub fn enumerate_assignments(sample: &GroupedSample, cap: u128) -> Result<AssignmentIter> {
    let needed = count_assignments(sample.sizes());
    if needed > cap {
        return Err(Error::CapExceeded { needed, cap });
    }
    Ok(AssignmentIter {
        labels: sample.labels(),
        sizes: sample.sizes().to_vec(),
        done: false,
    })
}

/// Seeded generator for a `(seed, stream)` pair.
pub(crate) fn scheme_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Identity followed by `B` assignments induced by uniform random
/// permutations. Fully determined by the scheme's seed and stream.
pub fn sample_assignments(sample: &GroupedSample, scheme: &PermutationScheme) -> Result<SampledAssignments> {
    if scheme.permutations == 0 {
        return Err(Error::Config("sampled scheme needs at least one permutation".into()));
    }
    Ok(SampledAssignments {
        rng: scheme_rng(scheme.seed, scheme.stream),
        n: sample.total(),
        emitted: 0,
        total: scheme.permutations + 1,
    })
}

pub struct SampledAssignments {
    rng: ChaCha8Rng,
    n: usize,
    emitted: u64,
    total: u64,
}

impl SampledAssignments {
    /// Writes the next shuffled order into `order`, reusing its allocation.
    pub(crate) fn next_into(&mut self, order: &mut Vec<usize>) -> bool {
        if self.emitted >= self.total {
            return false;
        }
        order.clear();
        order.extend(0..self.n);
        if self.emitted > 0 {
            order.shuffle(&mut self.rng);
        }
        self.emitted += 1;
        true
    }
}

impl Iterator for SampledAssignments {
    type Item = Assignment;

    fn next(&mut self) -> Option<Assignment> {
        let mut order = Vec::with_capacity(self.n);
        self.next_into(&mut order).then_some(Assignment { order })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.emitted) as usize;
        (left, Some(left))
    }
}
