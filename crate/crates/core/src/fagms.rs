// SPDX-License-Identifier: Apache-2.0

//! Non-private fast-AGMS sketch and the exact join-size oracle.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::hashing::HashFamily;

/// A `k x m` array of signed counters. Row `j` adds `xi_j(d)` at column `h_j(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FagmsSketch {
    family: HashFamily,
    counters: Vec<i64>,
}

impl FagmsSketch {
    pub fn new(family: HashFamily) -> Self {
        let counters = vec![0; family.k() * family.m()];
        FagmsSketch { family, counters }
    }

    pub fn from_values<'a>(family: HashFamily, values: impl IntoIterator<Item = &'a u64>) -> Self {
        let mut sketch = Self::new(family);
        for &d in values {
            sketch.insert(d);
        }
        sketch
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn insert(&mut self, d: u64) {
        let m = self.family.m();
        for (j, row) in self.family.rows().iter().enumerate() {
            self.counters[j * m + row.eval_h(d)] += row.eval_xi(d) as i64;
        }
    }

    pub fn row(&self, j: usize) -> &[i64] {
        let m = self.family.m();
        &self.counters[j * m..(j + 1) * m]
    }

    pub fn counters(&self) -> &[i64] {
        &self.counters
    }

    /// Cell-wise sum of two sketches over the same family.
    pub fn merge(&mut self, other: &FagmsSketch) -> Result<()> {
        if self.family != other.family {
            return Err(Error::FamilyMismatch);
        }
        for (a, b) in self.counters.iter_mut().zip(&other.counters) {
            *a += b;
        }
        Ok(())
    }

    /// Per-row inner products `sum_x A[j,x] * B[j,x]`.
    pub fn row_estimates(&self, other: &FagmsSketch) -> Result<Vec<f64>> {
        if self.family != other.family {
            return Err(Error::FamilyMismatch);
        }
        Ok((0..self.family.k())
            .map(|j| {
                self.row(j)
                    .iter()
                    .zip(other.row(j))
                    .map(|(&a, &b)| a as f64 * b as f64)
                    .sum()
            })
            .collect())
    }

    /// Median of the row inner products.
    pub fn join(&self, other: &FagmsSketch) -> Result<f64> {
        Ok(median(&mut self.row_estimates(other)?))
    }

    /// Mean over rows of `A[j, h_j(d)] * xi_j(d)`.
    pub fn estimate_frequency(&self, d: u64) -> f64 {
        let m = self.family.m();
        let sum: i64 = self
            .family
            .rows()
            .iter()
            .enumerate()
            .map(|(j, row)| self.counters[j * m + row.eval_h(d)] * row.eval_xi(d) as i64)
            .sum();
        sum as f64 / self.family.k() as f64
    }
}

/// Non-private join estimate of two value streams.
pub fn fagms_join(a: &FagmsSketch, b: &FagmsSketch) -> Result<f64> {
    a.join(b)
}

/// Median; an even count averages the two central order statistics.
///
/// Panics on an empty slice. NaNs sort last.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Exact frequency map of a multiset.
pub fn frequencies(values: &[u64]) -> HashMap<u64, u64> {
    let mut freq = HashMap::new();
    for &v in values {
        *freq.entry(v).or_insert(0) += 1;
    }
    freq
}

/// Exact `sum_d f_A(d) * f_B(d)`.
pub fn true_join_size(a: &[u64], b: &[u64]) -> u128 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let freq = frequencies(small);
    large
        .iter()
        .map(|v| freq.get(v).copied().unwrap_or(0) as u128)
        .sum()
}
