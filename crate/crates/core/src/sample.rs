use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pooled observations `Z = (X_1, .., X_{n_1}, Y_1, ..)` with the size of
/// each consecutive group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedSample {
    values: Vec<f64>,
    sizes: Vec<usize>,
}

impl GroupedSample {
    pub fn new(values: Vec<f64>, sizes: Vec<usize>) -> Result<Self> {
        validate_sizes(&sizes)?;
        let total: usize = sizes.iter().sum();
        if total != values.len() {
            return Err(Error::InvalidSample(format!(
                "group sizes sum to {total} but there are {} values",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!("non-finite value {bad}")));
        }
        Ok(Self { values, sizes })
    }

    pub fn from_groups<G: AsRef<[f64]>>(groups: &[G]) -> Result<Self> {
        let sizes = groups.iter().map(|g| g.as_ref().len()).collect();
        let values = groups.iter().flat_map(|g| g.as_ref().iter().copied()).collect();
        Self::new(values, sizes)
    }

    pub fn two(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::from_groups(&[x, y])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.values.len()
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn group(&self, i: usize) -> &[f64] {
        let start: usize = self.sizes[..i].iter().sum();
        &self.values[start..start + self.sizes[i]]
    }

    pub fn groups(&self) -> impl Iterator<Item = &[f64]> + '_ {
        group_slices(&self.values, &self.sizes)
    }

    /// `p_m = m / N`, the share of the first group.
    pub fn first_share(&self) -> f64 {
        self.sizes[0] as f64 / self.total() as f64
    }

    /// `q_m = n / N`.
    pub fn second_share(&self) -> f64 {
        self.sizes.get(1).copied().unwrap_or(0) as f64 / self.total() as f64
    }

    /// Group label (0-based) of every pooled position.
    pub fn labels(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &n)| std::iter::repeat_n(g, n))
            .collect()
    }

    /// The sample with pooled values reordered by `order` (`Z_pi`), sizes kept.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            values: order.iter().map(|&i| self.values[i]).collect(),
            sizes: self.sizes.clone(),
        }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.values.iter().map(|&v| f(v)).collect(), self.sizes.clone())
    }
}

pub(crate) fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidSample(format!(
            "need at least two groups, got {}",
            sizes.len()
        )));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidSample("every group needs at least one observation".into()));
    }
    Ok(())
}

/// Splits a pooled buffer into consecutive group slices.
pub fn group_slices<'a>(values: &'a [f64], sizes: &'a [usize]) -> impl Iterator<Item = &'a [f64]> + 'a {
    let mut start = 0;
    sizes.iter().map(move |&n| {
        let s = &values[start..start + n];
        start += n;
        s
    })
}

/// Mutable variant of [`group_slices`].
pub fn group_slices_mut<'a>(mut values: &'a mut [f64], sizes: &[usize]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let (head, tail) = std::mem::take(&mut values).split_at_mut(n);
        out.push(head);
        values = tail;
    }
    out
}
