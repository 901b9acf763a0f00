// SPDX-License-Identifier: Apache-2.0

//! Client-side perturbation: the only code that ever sees a raw join value.
//!
//! A client encodes its value `d` as the one-hot vector `v` with `v[h_j(d)] = xi_j(d)`
//! for a uniformly sampled row `j`, samples one coordinate `l` of `v * H_m`, and
//! releases it through randomized response. The Hadamard coordinate is computed
//! directly as `H_m[h_j(d), l] * xi_j(d)`, so a report costs O(1).
//!
//! Randomness: every draw is a single `next_u64` call on the supplied source.
//! [`client_perturb`] consumes three draws (`j`, `l`, flip) and the non-target path
//! of [`fap_perturb`] four (`j`, `l`, `r`, flip).

use rand::RngCore;

use crate::hashing::{hadamard_sign, HashFamily};
pub use crate::params::{debias_constant, flip_probability, SketchParams};

/// One client's release: a sign and the sketch cell it targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PerturbedReport {
    pub y: i8,
    pub j: u16,
    pub l: u32,
}

/// Which values a frequency-aware sketch targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FapMode {
    /// High-frequency values (members of the frequent item set) are targets.
    High,
    /// Low-frequency values are targets.
    Low,
}

impl FapMode {
    /// Whether a value with the given frequent-set membership is encoded truthfully.
    pub fn is_target(self, in_frequent_set: bool) -> bool {
        match self {
            FapMode::High => in_frequent_set,
            FapMode::Low => !in_frequent_set,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            FapMode::High => b'H',
            FapMode::Low => b'L',
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            b'H' => Some(FapMode::High),
            b'L' => Some(FapMode::Low),
            _ => None,
        }
    }
}

/// Sorted, deduplicated value ids. The server ships this to clients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SortedIdSet(Vec<u64>);

impl SortedIdSet {
    pub fn new(mut ids: Vec<u64>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        SortedIdSet(ids)
    }

    pub fn contains(&self, d: u64) -> bool {
        self.0.binary_search(&d).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

impl FromIterator<u64> for SortedIdSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        SortedIdSet::new(iter.into_iter().collect())
    }
}

/// Uniform index in `[0, n)` from one 64-bit draw (multiply-shift).
#[inline]
pub(crate) fn draw_index<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> usize {
    ((rng.next_u64() as u128 * n as u128) >> 64) as usize
}

/// Randomized-response bit: `-1` with probability `flip_p`, else `+1`.
#[inline]
pub(crate) fn draw_flip<R: RngCore + ?Sized>(rng: &mut R, flip_p: f64) -> i8 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    if u < flip_p {
        -1
    } else {
        1
    }
}

/// A client bound to fixed sketch parameters and hash family.
#[derive(Debug, Clone)]
pub struct LdpClient<'a> {
    family: &'a HashFamily,
    flip_p: f64,
}

impl<'a> LdpClient<'a> {
    pub fn new(params: &SketchParams, family: &'a HashFamily) -> Self {
        debug_assert_eq!((params.k, params.m), (family.k(), family.m()));
        LdpClient { family, flip_p: flip_probability(params.epsilon) }
    }

    pub fn family(&self) -> &HashFamily {
        self.family
    }

    /// Perturbs `d` with the signed one-hot encoding.
    pub fn perturb<R: RngCore + ?Sized>(&self, d: u64, rng: &mut R) -> PerturbedReport {
        let j = draw_index(rng, self.family.k());
        let l = draw_index(rng, self.family.m());
        let row = self.family.row(j);
        let w = hadamard_sign(row.eval_h(d), l) * row.eval_xi(d);
        let b = draw_flip(rng, self.flip_p);
        PerturbedReport { y: b * w, j: j as u16, l: l as u32 }
    }

    /// Frequency-aware perturbation. Non-targets are encoded at a random position
    /// independent of `d`; targets go through [`LdpClient::perturb`].
    pub fn perturb_fap<R: RngCore + ?Sized>(
        &self,
        d: u64,
        mode: FapMode,
        frequent: &SortedIdSet,
        rng: &mut R,
    ) -> PerturbedReport {
        if mode.is_target(frequent.contains(d)) {
            return self.perturb(d, rng);
        }
        let j = draw_index(rng, self.family.k());
        let l = draw_index(rng, self.family.m());
        let r = draw_index(rng, self.family.m());
        let b = draw_flip(rng, self.flip_p);
        PerturbedReport { y: b * hadamard_sign(r, l), j: j as u16, l: l as u32 }
    }
}

/// Perturbs one value; see [`LdpClient::perturb`].
pub fn client_perturb<R: RngCore + ?Sized>(
    d: u64,
    params: &SketchParams,
    family: &HashFamily,
    rng: &mut R,
) -> PerturbedReport {
    LdpClient::new(params, family).perturb(d, rng)
}

/// Frequency-aware perturbation of one value; see [`LdpClient::perturb_fap`].
pub fn fap_perturb<R: RngCore + ?Sized>(
    d: u64,
    mode: FapMode,
    frequent: &SortedIdSet,
    params: &SketchParams,
    family: &HashFamily,
    rng: &mut R,
) -> PerturbedReport {
    LdpClient::new(params, family).perturb_fap(d, mode, frequent, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::derive_family;
    use crate::seeding::client_rng;
    use rand::SeedableRng;
    use rand_xoshiro::SplitMix64;

    /// Counts how many `next_u64` calls were made.
    struct Counting(SplitMix64, usize);

    impl RngCore for Counting {
        fn next_u32(&mut self) -> u32 {
            self.1 += 1;
            self.0.next_u32()
        }
        fn next_u64(&mut self) -> u64 {
            self.1 += 1;
            self.0.next_u64()
        }
        fn fill_bytes(&mut self, dst: &mut [u8]) {
            self.1 += 1;
            self.0.fill_bytes(dst)
        }
    }

    fn setup(k: usize, m: usize, eps: f64) -> (SketchParams, HashFamily) {
        let p = SketchParams::new(k, m, eps, 12).unwrap();
        let f = derive_family(&p).unwrap();
        (p, f)
    }

    #[test]
    fn no_flip_at_infinite_budget() {
        let (p, f) = setup(4, 16, f64::INFINITY);
        for i in 0..2000 {
            let d = i % 37;
            let rep = client_perturb(d, &p, &f, &mut client_rng(3, i));
            let row = f.row(rep.j as usize);
            assert_eq!(rep.y, hadamard_sign(row.eval_h(d), rep.l as usize) * row.eval_xi(d));
        }
    }

    #[test]
    fn report_fields_in_range() {
        let (p, f) = setup(5, 8, 1.0);
        for i in 0..5000 {
            let rep = client_perturb(i * 31, &p, &f, &mut client_rng(9, i));
            assert!(rep.y == 1 || rep.y == -1);
            assert!((rep.j as usize) < 5);
            assert!((rep.l as usize) < 8);
        }
    }

    #[test]
    fn flip_rate_at_zero_budget() {
        let mut rng = SplitMix64::seed_from_u64(1);
        let n = 100_000;
        let flips = (0..n).filter(|_| draw_flip(&mut rng, flip_probability(0.0)) == -1).count();
        let sd = (0.25 / n as f64).sqrt();
        assert!((flips as f64 / n as f64 - 0.5).abs() <= 3.0 * sd);
    }

    #[test]
    fn draw_counts_are_fixed() {
        let (p, f) = setup(3, 8, 2.0);
        let fi = SortedIdSet::new(vec![1, 2, 3]);
        let client = LdpClient::new(&p, &f);
        let mut rng = Counting(SplitMix64::seed_from_u64(5), 0);
        client.perturb(10, &mut rng);
        assert_eq!(rng.1, 3);
        rng.1 = 0;
        // mode L, d in FI: non-target path
        client.perturb_fap(2, FapMode::Low, &fi, &mut rng);
        assert_eq!(rng.1, 4);
        rng.1 = 0;
        // mode L, d not in FI: target path
        client.perturb_fap(10, FapMode::Low, &fi, &mut rng);
        assert_eq!(rng.1, 3);
    }

    #[test]
    fn seeded_source_is_reproducible() {
        let (p, f) = setup(3, 8, 2.0);
        let a = client_perturb(77, &p, &f, &mut client_rng(1, 2));
        let b = client_perturb(77, &p, &f, &mut client_rng(1, 2));
        assert_eq!(a, b);
    }

    #[test]
    fn target_path_delegates() {
        let (p, f) = setup(3, 8, 2.0);
        let fi = SortedIdSet::new(vec![5]);
        for i in 0..500 {
            let direct = client_perturb(9, &p, &f, &mut client_rng(4, i));
            let fap = fap_perturb(9, FapMode::Low, &fi, &p, &f, &mut client_rng(4, i));
            assert_eq!(direct, fap);
            let direct = client_perturb(5, &p, &f, &mut client_rng(4, i));
            let fap = fap_perturb(5, FapMode::High, &fi, &p, &f, &mut client_rng(4, i));
            assert_eq!(direct, fap);
        }
    }

    #[test]
    fn non_target_ignores_value() {
        let (p, f) = setup(3, 8, 2.0);
        let fi = SortedIdSet::new(vec![5, 6]);
        for i in 0..500 {
            let a = fap_perturb(5, FapMode::Low, &fi, &p, &f, &mut client_rng(8, i));
            let b = fap_perturb(6, FapMode::Low, &fi, &p, &f, &mut client_rng(8, i));
            assert_eq!(a, b);
            let c = fap_perturb(100, FapMode::High, &SortedIdSet::default(), &p, &f, &mut client_rng(8, i));
            let e = fap_perturb(200, FapMode::High, &SortedIdSet::default(), &p, &f, &mut client_rng(8, i));
            assert_eq!(c, e);
        }
    }

    #[test]
    fn mode_target_table() {
        assert!(FapMode::High.is_target(true));
        assert!(!FapMode::High.is_target(false));
        assert!(FapMode::Low.is_target(false));
        assert!(!FapMode::Low.is_target(true));
        assert_eq!(FapMode::from_tag(FapMode::Low.tag()), Some(FapMode::Low));
        assert_eq!(FapMode::from_tag(b'x'), None);
    }

    #[test]
    fn sorted_id_set_dedups() {
        let s: SortedIdSet = [5u64, 1, 5, 3].into_iter().collect();
        assert_eq!(s.as_slice(), &[1, 3, 5]);
        assert!(s.contains(3) && !s.contains(4));
    }
}
