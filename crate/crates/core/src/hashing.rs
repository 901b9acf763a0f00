// SPDX-License-Identifier: Apache-2.0

//! Hash families and Hadamard helpers shared by every sketch.
//!
//! Row `j` of a family owns two functions:
//!
//! * `h_j`: a degree-1 polynomial `(a*d + b) mod p` reduced to `[0, m)`,
//!   pairwise independent;
//! * `xi_j`: a degree-3 polynomial mod `p` whose lowest bit selects the sign,
//!   four-wise independent.
//!
//! `p = 2^61 - 1`. Coefficients come from a SplitMix64 stream seeded with
//! `derive_seed(derive_seed(master_seed, j), tag)` where `tag` is [`TAG_H`] or
//! [`TAG_XI`]. The derivation is frozen: two parties holding the same master seed
//! reconstruct identical functions.

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::SplitMix64;

use crate::error::{Error, Result};
use crate::params::{check_shape, check_width, SketchParams};
use crate::seeding::derive_seed;

/// The Mersenne prime `2^61 - 1`.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

pub const TAG_H: u64 = 0x68;
pub const TAG_XI: u64 = 0x78;

#[inline]
fn fold(x: u64) -> u64 {
    // x < 2^64; one fold gives < 2^61 + 8, the conditional subtract finishes
    let r = (x & MERSENNE_61) + (x >> 61);
    if r >= MERSENNE_61 {
        r - MERSENNE_61
    } else {
        r
    }
}

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let prod = a as u128 * b as u128;
    let lo = (prod as u64) & MERSENNE_61;
    let hi = (prod >> 61) as u64;
    fold(lo + hi)
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    fold(a + b)
}

/// Reduces an arbitrary 64-bit id into the field.
#[inline]
fn to_field(d: u64) -> u64 {
    fold(d)
}

fn draw_coefficient(stream: &mut SplitMix64) -> u64 {
    loop {
        let c = stream.next_u64() >> 3;
        if c < MERSENNE_61 {
            return c;
        }
    }
}

/// The `(h_j, xi_j)` pair for one sketch row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashPair {
    row_index: usize,
    seed_h: u64,
    seed_xi: u64,
    m: usize,
    h_coeffs: [u64; 2],
    xi_coeffs: [u64; 4],
    signed: bool,
}

impl HashPair {
    pub fn new(row_index: usize, seed_h: u64, seed_xi: u64, m: usize) -> Result<Self> {
        check_width(m)?;
        let mut stream = SplitMix64::seed_from_u64(seed_h);
        let mut a = draw_coefficient(&mut stream);
        if a == 0 {
            a = 1;
        }
        let b = draw_coefficient(&mut stream);
        let mut stream = SplitMix64::seed_from_u64(seed_xi);
        let xi_coeffs = std::array::from_fn(|_| draw_coefficient(&mut stream));
        Ok(HashPair {
            row_index,
            seed_h,
            seed_xi,
            m,
            h_coeffs: [a, b],
            xi_coeffs,
            signed: true,
        })
    }

    pub fn row_index(&self) -> usize {
        self.row_index
    }

    pub fn seeds(&self) -> (u64, u64) {
        (self.seed_h, self.seed_xi)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Bucket of `d` in `[0, m)`.
    #[inline]
    pub fn eval_h(&self, d: u64) -> usize {
        let [a, b] = self.h_coeffs;
        let v = add_mod(mul_mod(a, to_field(d)), b);
        (v & (self.m as u64 - 1)) as usize
    }

    /// Sign of `d` in `{-1, +1}`. Always `+1` for unsigned families.
    #[inline]
    pub fn eval_xi(&self, d: u64) -> i8 {
        if !self.signed {
            return 1;
        }
        let x = to_field(d);
        let [c0, c1, c2, c3] = self.xi_coeffs;
        let mut acc = c3;
        acc = add_mod(mul_mod(acc, x), c2);
        acc = add_mod(mul_mod(acc, x), c1);
        acc = add_mod(mul_mod(acc, x), c0);
        1 - 2 * (acc & 1) as i8
    }
}

/// `k` hash pairs derived from one master seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashFamily {
    k: usize,
    m: usize,
    master_seed: u64,
    rows: Vec<HashPair>,
}

impl HashFamily {
    pub fn new(k: usize, m: usize, master_seed: u64) -> Result<Self> {
        check_shape(k, m)?;
        let rows = (0..k)
            .map(|j| {
                let row_seed = derive_seed(master_seed, j as u64);
                HashPair::new(
                    j,
                    derive_seed(row_seed, TAG_H),
                    derive_seed(row_seed, TAG_XI),
                    m,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(HashFamily { k, m, master_seed, rows })
    }

    /// Replaces every `xi_j` by the constant `+1`.
    ///
    /// Turns the signed encoding into the unsigned count-mean encoding, which is
    /// what the Hadamard count-mean sketch uses.
    pub fn without_xi(mut self) -> Self {
        for row in &mut self.rows {
            row.signed = false;
        }
        self
    }

    pub fn is_signed(&self) -> bool {
        self.rows.first().is_some_and(|r| r.signed)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn rows(&self) -> &[HashPair] {
        &self.rows
    }

    #[inline]
    pub fn row(&self, j: usize) -> &HashPair {
        &self.rows[j]
    }
}

/// Builds the family for `params`. Any two callers with equal `(k, m, master_seed)`
/// obtain equal families.
pub fn derive_family(params: &SketchParams) -> Result<HashFamily> {
    HashFamily::new(params.k, params.m, params.master_seed)
}

/// `H_m[a, b] = (-1)^popcount(a & b)` without bounds checks.
#[inline]
pub fn hadamard_sign(a: usize, b: usize) -> i8 {
    1 - 2 * ((a & b).count_ones() & 1) as i8
}

/// Entry `(a, b)` of the Sylvester-Hadamard matrix of order `m`.
pub fn hadamard_entry(a: usize, b: usize, m: usize) -> Result<i8> {
    check_width(m)?;
    if a >= m || b >= m {
        return Err(Error::HadamardIndex { row: a, col: b, order: m });
    }
    Ok(hadamard_sign(a, b))
}

/// In-place unnormalized fast Walsh-Hadamard transform: `v <- v * H_m`.
///
/// `H_m` is symmetric, so this equals multiplication by `H_m^T` too.
pub fn fwht<T>(v: &mut [T])
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T>,
{
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in v.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        half *= 2;
    }
}
