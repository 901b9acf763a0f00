// SPDX-License-Identifier: Apache-2.0

//! k-ary randomized response over the full value domain.

use rand::RngCore;

use crate::client::draw_index;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrrParams {
    pub epsilon: f64,
    pub domain_size: u64,
    /// Keep probability `e^eps / (e^eps + |D| - 1)`.
    pub p: f64,
    /// Probability of each specific other value, `1 / (e^eps + |D| - 1)`.
    pub q: f64,
}

impl KrrParams {
    pub fn new(epsilon: f64, domain_size: u64) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        if domain_size < 2 {
            return Err(Error::InvalidParameter(format!("k-RR needs at least two values, got {domain_size}")));
        }
        // divide through by e^eps so eps = inf stays finite
        let e_neg = (-epsilon).exp();
        let denom = 1.0 + (domain_size - 1) as f64 * e_neg;
        Ok(KrrParams { epsilon, domain_size, p: 1.0 / denom, q: e_neg / denom })
    }
}

/// Keeps `d` with probability `p`, otherwise returns a uniform other value.
pub fn krr_perturb<R: RngCore + ?Sized>(d: u64, params: &KrrParams, rng: &mut R) -> Result<u64> {
    if d >= params.domain_size {
        return Err(Error::OutOfDomain { value: d, domain: params.domain_size });
    }
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    if u < params.p {
        return Ok(d);
    }
    let other = draw_index(rng, (params.domain_size - 1) as usize) as u64;
    Ok(if other >= d { other + 1 } else { other })
}

/// Unbiased frequency vector `(count(d) - n q) / (p - q)` for all `d` in the domain.
pub fn krr_calibrate(reports: &[u64], params: &KrrParams) -> Result<Vec<f64>> {
    if params.p <= params.q {
        return Err(Error::DegenerateCalibration);
    }
    let mut counts = vec![0u64; params.domain_size as usize];
    for &r in reports {
        let slot = counts
            .get_mut(r as usize)
            .ok_or(Error::OutOfDomain { value: r, domain: params.domain_size })?;
        *slot += 1;
    }
    let base = reports.len() as f64 * params.q;
    let gap = params.p - params.q;
    Ok(counts.into_iter().map(|c| (c as f64 - base) / gap).collect())
}

/// `sum_d f~_A(d) * f~_B(d)` from calibrated frequency vectors.
pub fn krr_join_estimate(a_reports: &[u64], b_reports: &[u64], params: &KrrParams) -> Result<f64> {
    let fa = krr_calibrate(a_reports, params)?;
    let fb = krr_calibrate(b_reports, params)?;
    Ok(fa.iter().zip(&fb).map(|(x, y)| x * y).sum())
}

/// Bits a client sends when its perturbed value is shipped as a one-hot vector over the domain.
pub fn krr_payload_bits(domain_size: u64) -> u64 {
    domain_size
}
