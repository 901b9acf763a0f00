// SPDX-License-Identifier: Apache-2.0

use std::ops::Range;

use super::PrivateSketch;
use crate::client::SortedIdSet;
use crate::error::{Error, Result};

/// Frequent join values found from sampled users, with their frequency estimates.
///
/// Estimates are scaled from the sample to the full population (`|X| / |S_X|`) and
/// kept raw, i.e. possibly negative; [`FrequentItemSet::clamped_a`] gives the clamped
/// view used for thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequentItemSet {
    items: SortedIdSet,
    theta: f64,
    freq_a: Vec<f64>,
    freq_b: Vec<f64>,
    sample_sizes: (u64, u64),
    population_sizes: (u64, u64),
}

impl FrequentItemSet {
    /// A set with no frequent items.
    pub fn empty(sample_sizes: (u64, u64), population_sizes: (u64, u64)) -> Self {
        FrequentItemSet {
            items: SortedIdSet::default(),
            theta: 1.0,
            freq_a: Vec::new(),
            freq_b: Vec::new(),
            sample_sizes,
            population_sizes,
        }
    }

    /// Assembles a set from known `(id, est_a, est_b)` triples.
    pub fn from_estimates(
        entries: impl IntoIterator<Item = (u64, f64, f64)>,
        theta: f64,
        sample_sizes: (u64, u64),
        population_sizes: (u64, u64),
    ) -> Self {
        let mut entries: Vec<_> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        FrequentItemSet {
            items: SortedIdSet::new(entries.iter().map(|e| e.0).collect()),
            theta,
            freq_a: entries.iter().map(|e| e.1).collect(),
            freq_b: entries.iter().map(|e| e.2).collect(),
            sample_sizes,
            population_sizes,
        }
    }

    pub fn items(&self) -> &SortedIdSet {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sample_sizes(&self) -> (u64, u64) {
        self.sample_sizes
    }

    pub fn population_sizes(&self) -> (u64, u64) {
        self.population_sizes
    }

    fn position(&self, d: u64) -> Option<usize> {
        self.items.as_slice().binary_search(&d).ok()
    }

    pub fn estimate_a(&self, d: u64) -> Option<f64> {
        self.position(d).map(|i| self.freq_a[i])
    }

    pub fn estimate_b(&self, d: u64) -> Option<f64> {
        self.position(d).map(|i| self.freq_b[i])
    }

    pub fn clamped_a(&self, d: u64) -> Option<f64> {
        self.estimate_a(d).map(|f| f.max(0.0))
    }

    pub fn clamped_b(&self, d: u64) -> Option<f64> {
        self.estimate_b(d).map(|f| f.max(0.0))
    }

    /// Estimated population mass of frequent items in attribute A.
    pub fn high_freq_a(&self) -> f64 {
        self.freq_a.iter().sum()
    }

    /// Estimated population mass of frequent items in attribute B.
    pub fn high_freq_b(&self) -> f64 {
        self.freq_b.iter().sum()
    }
}

/// Scans `domain` and keeps every value whose population-scaled estimate exceeds
/// `theta * |X|` in either attribute.
pub fn find_frequent_items(
    sketch_a: &PrivateSketch,
    sketch_b: &PrivateSketch,
    domain: Range<u64>,
    theta: f64,
    sample_sizes: (u64, u64),
    population_sizes: (u64, u64),
) -> Result<FrequentItemSet> {
    if domain.is_empty() {
        return Err(Error::EmptyDomain);
    }
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if sample_sizes.0 == 0 {
        return Err(Error::EmptyGroup("S_A"));
    }
    if sample_sizes.1 == 0 {
        return Err(Error::EmptyGroup("S_B"));
    }
    let scale_a = population_sizes.0 as f64 / sample_sizes.0 as f64;
    let scale_b = population_sizes.1 as f64 / sample_sizes.1 as f64;
    let cut_a = theta * population_sizes.0 as f64;
    let cut_b = theta * population_sizes.1 as f64;

    let mut entries = Vec::new();
    for d in domain {
        let fa = sketch_a.estimate_frequency(d)? * scale_a;
        let fb = sketch_b.estimate_frequency(d)? * scale_b;
        if fa.max(0.0) > cut_a || fb.max(0.0) > cut_b {
            entries.push((d, fa, fb));
        }
    }
    Ok(FrequentItemSet::from_estimates(entries, theta, sample_sizes, population_sizes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::client::{client_perturb, SketchParams};
    use crate::hashing::derive_family;
    use crate::server::prisk_build;
    use crate::seeding::client_rng;

    fn sketch(values: &[u64], eps: f64, seed: u64) -> PrivateSketch {
        let p = SketchParams::new(8, 256, eps, seed).unwrap();
        let f = derive_family(&p).unwrap();
        let reps: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, &d)| client_perturb(d, &p, &f, &mut client_rng(seed ^ 0x77, i as u64)))
            .collect();
        prisk_build(&reps, &p, &f).unwrap()
    }

    #[test]
    fn theta_one_finds_nothing() {
        let values: Vec<u64> = (0..2000).map(|i| i % 10).collect();
        let sk = sketch(&values, 8.0, 1);
        let fi = find_frequent_items(&sk, &sk, 0..10, 1.0, (2000, 2000), (2000, 2000)).unwrap();
        assert!(fi.is_empty());
    }

    #[test]
    fn dominant_value_is_found() {
        let mut values = vec![42u64; 5000];
        values.extend(0..20);
        let n = values.len() as u64;
        let sk = sketch(&values, 8.0, 2);
        let fi = find_frequent_items(&sk, &sk, 0..100, 1e-9, (n, n), (n, n)).unwrap();
        assert!(fi.items().contains(42));
        let est = fi.estimate_a(42).unwrap();
        assert!((est - 5000.0).abs() < 500.0, "{est}");
    }

    #[test]
    fn population_scaling() {
        let values = vec![3u64; 1000];
        let sk = sketch(&values, f64::INFINITY, 3);
        let fi = find_frequent_items(&sk, &sk, 0..8, 0.5, (1000, 1000), (10_000, 10_000)).unwrap();
        let est = fi.estimate_a(3).unwrap();
        assert!((est - 10_000.0).abs() < 1000.0, "{est}");
        assert!((fi.high_freq_a() - fi.iter_sum_a()).abs() < 1e-9);
    }

    #[test]
    fn bad_inputs() {
        let sk = sketch(&[1, 2, 3], 1.0, 4);
        assert!(matches!(find_frequent_items(&sk, &sk, 5..5, 0.1, (3, 3), (3, 3)), Err(Error::EmptyDomain)));
        assert!(matches!(
            find_frequent_items(&sk, &sk, 0..5, 0.1, (0, 3), (3, 3)),
            Err(Error::EmptyGroup("S_A"))
        ));
        assert!(find_frequent_items(&sk, &sk, 0..5, 0.0, (3, 3), (3, 3)).is_err());
    }

    #[test]
    fn clamping_only_affects_view() {
        let fi = FrequentItemSet::from_estimates([(1, -5.0, 10.0), (2, 7.0, 1.0)], 0.1, (1, 1), (1, 1));
        assert_eq!(fi.estimate_a(1), Some(-5.0));
        assert_eq!(fi.clamped_a(1), Some(0.0));
        assert_eq!(fi.high_freq_a(), 2.0);
        assert_eq!(fi.high_freq_b(), 11.0);
        assert_eq!(fi.estimate_b(3), None);
    }

    impl FrequentItemSet {
        fn iter_sum_a(&self) -> f64 {
            self.items.iter().filter_map(|d| self.estimate_a(d)).sum()
        }
    }
}
