// SPDX-License-Identifier: Apache-2.0

//! Synthetic value generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seeding::{derive_seed, run_rng};

const TAG_PERMUTATION: u64 = 1;
const TAG_DRAWS: u64 = 2;

/// Zipf law over ranks `1..=domain` with a seeded rank-to-id permutation.
#[derive(Debug, Clone)]
pub struct ZipfSampler {
    cdf: Vec<f64>,
    ids: Vec<u64>,
}

impl ZipfSampler {
    pub fn new(domain: u64, alpha: f64, seed: u64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("zipf alpha must be positive, got {alpha}")));
        }
        if domain == 0 {
            return Err(Error::EmptyDomain);
        }
        let pmf = zipf_pmf(domain, alpha);
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cdf.last_mut().unwrap() = 1.0;
        let mut ids: Vec<u64> = (0..domain).collect();
        ids.shuffle(&mut run_rng(derive_seed(seed, TAG_PERMUTATION)));
        Ok(ZipfSampler { cdf, ids })
    }

    /// Id of the value at `rank` (1-based).
    pub fn id_of_rank(&self, rank: usize) -> u64 {
        self.ids[rank - 1]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        let rank = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        self.ids[rank]
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Normalized `1 / x^alpha` over ranks `1..=domain`.
pub fn zipf_pmf(domain: u64, alpha: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=domain).map(|x| (x as f64).powf(-alpha)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// `n` i.i.d. Zipf draws.
pub fn gen_zipf(n: usize, domain: u64, alpha: f64, seed: u64) -> Result<Vec<u64>> {
    let sampler = ZipfSampler::new(domain, alpha, seed)?;
    Ok(sampler.sample_n(n, &mut run_rng(derive_seed(seed, TAG_DRAWS))))
}

/// `n` draws of `round(N(mu, sigma))` clamped to `[0, domain)`.
pub fn gen_gaussian(n: usize, domain: u64, mu: f64, sigma: f64, seed: u64) -> Result<Vec<u64>> {
    if domain == 0 {
        return Err(Error::EmptyDomain);
    }
    if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("invalid gaussian parameters mu={mu} sigma={sigma}")));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = run_rng(derive_seed(seed, TAG_DRAWS));
    let top = (domain - 1) as f64;
    Ok((0..n).map(|_| normal.sample(&mut rng).round().clamp(0.0, top) as u64).collect())
}
