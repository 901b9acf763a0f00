// SPDX-License-Identifier: Apache-2.0

//! End-to-end pipelines: simulated clients feeding the aggregator.
//!
//! Client `i` of attribute `X` draws its randomness from
//! `client_rng(derive_seed(run_seed, tag_X), i)`, so a run is a pure function of the
//! inputs and `run_seed`.

use std::ops::Range;

use rand::seq::SliceRandom;

use super::{find_frequent_items, FrequentItemSet, PrivateSketch};
use crate::client::{FapMode, LdpClient, SketchParams, SortedIdSet};
use crate::error::{Error, Result};
use crate::fagms::median;
use crate::hashing::{derive_family, HashFamily};
use crate::seeding::{client_rng, derive_seed, run_rng, tags};

/// How the expected non-target mass is removed from phase-two sketches.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NonTargetCorrection {
    /// Non-target count expected inside the group: population mass scaled by `|X_g| / |X|`.
    #[default]
    GroupScaled,
    /// Population-level mass, unscaled.
    Population,
}

/// A join-size estimate with its two-phase breakdown when applicable.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinEstimate {
    pub value: f64,
    /// `(LEst, HEst)` for the two-phase estimator.
    pub components: Option<(f64, f64)>,
    /// `(|A||B| / (|A1||B1|), |A||B| / (|A2||B2|))`.
    pub scale_factors: Option<(f64, f64)>,
    /// Size of the frequent item set found in phase one.
    pub frequent_items: Option<usize>,
}

impl JoinEstimate {
    fn single(value: f64) -> Self {
        JoinEstimate { value, components: None, scale_factors: None, frequent_items: None }
    }
}

/// Parameters of the two-phase estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct PlusConfig {
    /// Fraction of users sampled for phase one.
    pub rate: f64,
    /// Frequency threshold as a fraction of the population.
    pub theta: f64,
    /// Candidate ids scanned for frequent items.
    pub domain: Range<u64>,
    pub correction: NonTargetCorrection,
}

impl PlusConfig {
    pub const DEFAULT_RATE: f64 = 0.1;
    pub const DEFAULT_THETA: f64 = 0.001;

    pub fn new(domain: Range<u64>) -> Self {
        PlusConfig {
            rate: Self::DEFAULT_RATE,
            theta: Self::DEFAULT_THETA,
            domain,
            correction: NonTargetCorrection::default(),
        }
    }
}

/// Perturbs every `(client index, value)` pair and accumulates an unrestored sketch.
fn accumulate(
    users: impl IntoIterator<Item = (u64, u64)>,
    params: &SketchParams,
    family: &HashFamily,
    stream_seed: u64,
    perturb: impl Fn(&LdpClient<'_>, u64, &mut rand_xoshiro::SplitMix64) -> crate::client::PerturbedReport,
) -> Result<PrivateSketch> {
    let client = LdpClient::new(params, family);
    let mut sketch = PrivateSketch::new(*params, family.clone())?;
    for (index, value) in users {
        let report = perturb(&client, value, &mut client_rng(stream_seed, index));
        sketch.add(&report)?;
    }
    Ok(sketch)
}

/// Restored sketch of the given users under plain perturbation.
pub fn build_sketch(
    users: impl IntoIterator<Item = (u64, u64)>,
    params: &SketchParams,
    family: &HashFamily,
    stream_seed: u64,
) -> Result<PrivateSketch> {
    let mut sketch = accumulate(users, params, family, stream_seed, |c, d, rng| c.perturb(d, rng))?;
    sketch.restore()?;
    Ok(sketch)
}

/// Restored sketch of the given users under frequency-aware perturbation.
pub fn build_fap_sketch(
    users: impl IntoIterator<Item = (u64, u64)>,
    mode: FapMode,
    frequent: &SortedIdSet,
    params: &SketchParams,
    family: &HashFamily,
    stream_seed: u64,
) -> Result<PrivateSketch> {
    let mut sketch = accumulate(users, params, family, stream_seed, |c, d, rng| {
        c.perturb_fap(d, mode, frequent, rng)
    })?
    .with_mode(mode);
    sketch.restore()?;
    Ok(sketch)
}

fn indexed(values: &[u64]) -> impl Iterator<Item = (u64, u64)> + '_ {
    values.iter().enumerate().map(|(i, &d)| (i as u64, d))
}

/// One-phase sketches of both attributes.
pub fn ldp_sketch_pair(
    a: &[u64],
    b: &[u64],
    params: &SketchParams,
    family: &HashFamily,
    run_seed: u64,
) -> Result<(PrivateSketch, PrivateSketch)> {
    let sa = build_sketch(indexed(a), params, family, derive_seed(run_seed, tags::ATTR_A))?;
    let sb = build_sketch(indexed(b), params, family, derive_seed(run_seed, tags::ATTR_B))?;
    Ok((sa, sb))
}

/// One-phase private join estimate.
pub fn ldp_join_sketch(a: &[u64], b: &[u64], params: &SketchParams, run_seed: u64) -> Result<JoinEstimate> {
    let family = derive_family(params)?;
    let (sa, sb) = ldp_sketch_pair(a, b, params, &family, run_seed)?;
    Ok(JoinEstimate::single(sa.join(&sb)?))
}

/// Join estimate of two frequency-aware sketches after removing the expected
/// non-target mass `NT / m` from every cell.
pub fn join_est(
    sketch_a: &PrivateSketch,
    sketch_b: &PrivateSketch,
    mode: FapMode,
    frequent: &FrequentItemSet,
    group_sizes: (u64, u64),
    correction: NonTargetCorrection,
) -> Result<f64> {
    for sk in [sketch_a, sketch_b] {
        if sk.mode() != Some(mode) {
            return Err(Error::ModeMismatch { expected: mode, found: sk.mode() });
        }
    }
    if group_sizes.0 == 0 {
        return Err(Error::EmptyGroup("A_g"));
    }
    if group_sizes.1 == 0 {
        return Err(Error::EmptyGroup("B_g"));
    }
    let (pop_a, pop_b) = frequent.population_sizes();
    let non_target = |high: f64, population: u64, group: u64| {
        let mass = match mode {
            FapMode::Low => high,
            FapMode::High => population as f64 - high,
        };
        match correction {
            NonTargetCorrection::GroupScaled => mass / population as f64 * group as f64,
            NonTargetCorrection::Population => mass,
        }
    };
    let m = sketch_a.params().m as f64;
    let shift_a = non_target(frequent.high_freq_a(), pop_a, group_sizes.0) / m;
    let shift_b = non_target(frequent.high_freq_b(), pop_b, group_sizes.1) / m;
    Ok(median(&mut sketch_a.shifted_row_estimates(sketch_b, shift_a, shift_b)?))
}

/// Random split of `values` into a phase-one sample and two phase-two groups,
/// each as `(client index, value)` pairs.
struct Partition {
    sample: Vec<(u64, u64)>,
    low: Vec<(u64, u64)>,
    high: Vec<(u64, u64)>,
}

fn partition(values: &[u64], rate: f64, seed: u64, names: [&'static str; 3]) -> Result<Partition> {
    let mut order: Vec<u64> = (0..values.len() as u64).collect();
    order.shuffle(&mut run_rng(seed));
    let sample_len = (rate * values.len() as f64).round() as usize;
    let (sample, rest) = order.split_at(sample_len);
    let (low, high) = rest.split_at(rest.len() / 2);
    let pairs = |idx: &[u64]| idx.iter().map(|&i| (i, values[i as usize])).collect::<Vec<_>>();
    let part = Partition { sample: pairs(sample), low: pairs(low), high: pairs(high) };
    for (group, name) in [&part.sample, &part.low, &part.high].into_iter().zip(names) {
        if group.is_empty() {
            return Err(Error::EmptyGroup(name));
        }
    }
    Ok(part)
}

/// Two-phase private join estimate.
///
/// Phase one sketches a `rate` sample of each attribute and extracts the frequent
/// item set. The remaining users are split in halves: the first builds low-target
/// sketches, the second high-target sketches. The two group estimates are scaled up
/// to the full populations and added.
pub fn ldp_join_sketch_plus(
    a: &[u64],
    b: &[u64],
    params: &SketchParams,
    config: &PlusConfig,
    run_seed: u64,
) -> Result<JoinEstimate> {
    if !(config.rate > 0.0 && config.rate < 1.0) {
        return Err(Error::InvalidParameter(format!("sample rate must be in (0, 1), got {}", config.rate)));
    }
    if !(config.theta > 0.0 && config.theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta must be in (0, 1), got {}", config.theta)));
    }
    let family = derive_family(params)?;
    let stream_a = derive_seed(run_seed, tags::ATTR_A);
    let stream_b = derive_seed(run_seed, tags::ATTR_B);
    let part_a = partition(a, config.rate, derive_seed(run_seed, tags::PARTITION ^ tags::ATTR_A), ["S_A", "A1", "A2"])?;
    let part_b = partition(b, config.rate, derive_seed(run_seed, tags::PARTITION ^ tags::ATTR_B), ["S_B", "B1", "B2"])?;

    let sample_a = build_sketch(part_a.sample.iter().copied(), params, &family, stream_a)?;
    let sample_b = build_sketch(part_b.sample.iter().copied(), params, &family, stream_b)?;
    let sizes = |p: &Partition| (p.sample.len() as u64, p.low.len() as u64, p.high.len() as u64);
    let (sa_len, a1_len, a2_len) = sizes(&part_a);
    let (sb_len, b1_len, b2_len) = sizes(&part_b);
    let (pop_a, pop_b) = (a.len() as u64, b.len() as u64);
    let frequent = find_frequent_items(
        &sample_a,
        &sample_b,
        config.domain.clone(),
        config.theta,
        (sa_len, sb_len),
        (pop_a, pop_b),
    )?;

    let fi = frequent.items();
    let low_a = build_fap_sketch(part_a.low.iter().copied(), FapMode::Low, fi, params, &family, stream_a)?;
    let low_b = build_fap_sketch(part_b.low.iter().copied(), FapMode::Low, fi, params, &family, stream_b)?;
    let high_a = build_fap_sketch(part_a.high.iter().copied(), FapMode::High, fi, params, &family, stream_a)?;
    let high_b = build_fap_sketch(part_b.high.iter().copied(), FapMode::High, fi, params, &family, stream_b)?;

    let low_est = join_est(&low_a, &low_b, FapMode::Low, &frequent, (a1_len, b1_len), config.correction)?;
    let high_est = join_est(&high_a, &high_b, FapMode::High, &frequent, (a2_len, b2_len), config.correction)?;

    let full = pop_a as f64 * pop_b as f64;
    let scale_low = full / (a1_len as f64 * b1_len as f64);
    let scale_high = full / (a2_len as f64 * b2_len as f64);
    Ok(JoinEstimate {
        value: scale_low * low_est + scale_high * high_est,
        components: Some((low_est, high_est)),
        scale_factors: Some((scale_low, scale_high)),
        frequent_items: Some(frequent.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fagms::true_join_size;
    use crate::server::prisk_build;

    fn params(k: usize, m: usize, eps: f64, seed: u64) -> SketchParams {
        SketchParams::new(k, m, eps, seed).unwrap()
    }

    #[test]
    fn empty_frequent_set_low_mode_is_plain_product() {
        let p = params(6, 64, 2.0, 1);
        let fam = derive_family(&p).unwrap();
        let a: Vec<u64> = (0..3000).map(|i| i % 50).collect();
        let b: Vec<u64> = (0..2000).map(|i| i % 30).collect();
        let fi = FrequentItemSet::empty((1, 1), (3000, 2000));
        let ma = build_fap_sketch(indexed(&a), FapMode::Low, fi.items(), &p, &fam, 1).unwrap();
        let mb = build_fap_sketch(indexed(&b), FapMode::Low, fi.items(), &p, &fam, 2).unwrap();
        let est = join_est(&ma, &mb, FapMode::Low, &fi, (3000, 2000), NonTargetCorrection::GroupScaled).unwrap();
        assert_eq!(est, ma.join(&mb).unwrap());
        // every value is a target: identical to the plain client path
        let plain_a = build_sketch(indexed(&a), &p, &fam, 1).unwrap();
        assert_eq!(plain_a.counters(), ma.counters());
    }

    #[test]
    fn join_est_checks_mode_and_groups() {
        let p = params(2, 8, 1.0, 1);
        let fam = derive_family(&p).unwrap();
        let plain = prisk_build(&[], &p, &fam).unwrap();
        let fi = FrequentItemSet::empty((1, 1), (1, 1));
        let err = join_est(&plain, &plain, FapMode::Low, &fi, (1, 1), NonTargetCorrection::GroupScaled);
        assert!(matches!(err, Err(Error::ModeMismatch { found: None, .. })));
        let low = build_fap_sketch(indexed(&[1]), FapMode::Low, fi.items(), &p, &fam, 0).unwrap();
        let err = join_est(&low, &low, FapMode::High, &fi, (1, 1), NonTargetCorrection::GroupScaled);
        assert!(matches!(err, Err(Error::ModeMismatch { .. })));
        let err = join_est(&low, &low, FapMode::Low, &fi, (0, 1), NonTargetCorrection::GroupScaled);
        assert!(matches!(err, Err(Error::EmptyGroup(_))));
    }

    #[test]
    fn correction_variants_differ_only_by_shift() {
        let p = params(4, 32, 4.0, 3);
        let fam = derive_family(&p).unwrap();
        let a: Vec<u64> = (0..1000).map(|i| i % 9).collect();
        let fi = FrequentItemSet::from_estimates([(0, 400.0, 300.0)], 0.01, (100, 100), (4000, 4000));
        let ma = build_fap_sketch(indexed(&a), FapMode::High, fi.items(), &p, &fam, 5).unwrap();
        let group = join_est(&ma, &ma, FapMode::High, &fi, (1000, 1000), NonTargetCorrection::GroupScaled).unwrap();
        let pop = join_est(&ma, &ma, FapMode::High, &fi, (1000, 1000), NonTargetCorrection::Population).unwrap();
        let shift_g_a = (4000.0 - 400.0) / 4000.0 * 1000.0 / 32.0;
        let shift_g_b = (4000.0 - 300.0) / 4000.0 * 1000.0 / 32.0;
        let manual = median(&mut ma.shifted_row_estimates(&ma, shift_g_a, shift_g_b).unwrap());
        assert_eq!(group, manual);
        let manual = median(&mut ma.shifted_row_estimates(&ma, 3600.0 / 32.0, 3700.0 / 32.0).unwrap());
        assert_eq!(pop, manual);
    }

    #[test]
    fn plus_is_deterministic_and_validates() {
        let p = params(4, 64, 4.0, 2);
        let a: Vec<u64> = (0..4000).map(|i| (i * i) % 17).collect();
        let b: Vec<u64> = (0..3000).map(|i| i % 23).collect();
        let cfg = PlusConfig { theta: 0.01, ..PlusConfig::new(0..32) };
        let e1 = ldp_join_sketch_plus(&a, &b, &p, &cfg, 9).unwrap();
        let e2 = ldp_join_sketch_plus(&a, &b, &p, &cfg, 9).unwrap();
        assert_eq!(e1, e2);
        assert!(e1.components.is_some());
        let bad = PlusConfig { rate: 1.0, ..cfg.clone() };
        assert!(ldp_join_sketch_plus(&a, &b, &p, &bad, 9).is_err());
        let bad = PlusConfig { theta: 0.0, ..cfg.clone() };
        assert!(ldp_join_sketch_plus(&a, &b, &p, &bad, 9).is_err());
        assert!(matches!(ldp_join_sketch_plus(&[1], &b, &p, &cfg, 9), Err(Error::EmptyGroup(_))));
    }

    #[test]
    fn partition_covers_every_user_once() {
        let values: Vec<u64> = (100..1100).collect();
        let part = partition(&values, 0.1, 5, ["s", "l", "h"]).unwrap();
        assert_eq!(part.sample.len(), 100);
        assert_eq!(part.low.len(), 450);
        assert_eq!(part.high.len(), 450);
        let mut all: Vec<u64> = part.sample.iter().chain(&part.low).chain(&part.high).map(|p| p.0).collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        assert!(part.sample.iter().all(|&(i, v)| values[i as usize] == v));
    }

    #[test]
    fn one_phase_single_value() {
        let p = params(18, 1024, 8.0, 4);
        let a = vec![7u64; 2000];
        let runs = 20;
        let mean: f64 = (0..runs)
            .map(|r| ldp_join_sketch(&a, &a, &p, r).unwrap().value)
            .sum::<f64>()
            / runs as f64;
        let truth = true_join_size(&a, &a) as f64;
        assert!((mean - truth).abs() / truth < 0.05, "{mean} vs {truth}");
    }
}
