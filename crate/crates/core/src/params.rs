// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

/// Largest row count representable in the 16-bit report row field.
pub const MAX_DEPTH: usize = 1 << 16;

/// Shape, privacy budget and master seed of a private sketch.
///
/// `epsilon` may be `f64::INFINITY`, which disables the randomized-response flip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchParams {
    pub k: usize,
    pub m: usize,
    pub epsilon: f64,
    pub master_seed: u64,
}

impl SketchParams {
    pub fn new(k: usize, m: usize, epsilon: f64, master_seed: u64) -> Result<Self> {
        check_shape(k, m)?;
        if !(epsilon > 0.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(SketchParams { k, m, epsilon, master_seed })
    }

    /// Same shape and seed, different budget.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.k, self.m, epsilon, self.master_seed)
    }

    /// Debias constant `c_eps = (e^eps + 1) / (e^eps - 1)`.
    pub fn c_eps(&self) -> f64 {
        debias_constant(self.epsilon)
    }

    /// Per-report scale applied by the aggregator: `k * c_eps`.
    pub fn report_scale(&self) -> f64 {
        self.k as f64 * self.c_eps()
    }
}

pub(crate) fn check_shape(k: usize, m: usize) -> Result<()> {
    if k == 0 || k > MAX_DEPTH {
        return Err(Error::InvalidDepth(k));
    }
    check_width(m)
}

pub(crate) fn check_width(m: usize) -> Result<()> {
    if m < 2 || !m.is_power_of_two() || m as u64 > u32::MAX as u64 {
        return Err(Error::InvalidWidth(m));
    }
    Ok(())
}

/// `(e^eps + 1) / (e^eps - 1)`, evaluated as `coth(eps / 2)` so that `eps = inf` gives 1.
pub fn debias_constant(epsilon: f64) -> f64 {
    1.0 / (epsilon / 2.0).tanh()
}

/// Probability `1 / (e^eps + 1)` that randomized response flips the sign.
pub fn flip_probability(epsilon: f64) -> f64 {
    let t = (-epsilon).exp();
    t / (1.0 + t)
}
