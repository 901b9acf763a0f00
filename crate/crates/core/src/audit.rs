// SPDX-License-Identifier: Apache-2.0

//! Exact output laws of the client mechanisms, for privacy checks by enumeration.
//!
//! A client's output distribution depends on its value only through the per-row
//! codes `(h_j(d), xi_j(d))`. Enumerating every code vector therefore covers every
//! possible input under every possible hash family.
//!
//! Each output probability is `(a * keep + b * flip) / denom` with integer `a, b`,
//! where `keep / flip = e^eps`. Comparing `a t + b <= t (a' t + b')` with `t = e^eps`
//! avoids rounding in the ratio itself.

use crate::error::{Error, Result};
use crate::hashing::{hadamard_sign, HashFamily};

/// Largest number of input codes an audit will enumerate.
pub const MAX_CODES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputLaw {
    pub denom: u64,
    /// `[keep multiplicity, flip multiplicity]` per output.
    pub cells: Vec<[u64; 2]>,
}

impl OutputLaw {
    pub fn probability(&self, output: usize, epsilon: f64) -> f64 {
        let (keep, flip) = keep_flip(epsilon);
        let [a, b] = self.cells[output];
        (a as f64 * keep + b as f64 * flip) / self.denom as f64
    }

    fn weight(&self, output: usize, t: f64) -> f64 {
        let [a, b] = self.cells[output];
        a as f64 * t + b as f64
    }
}

fn keep_flip(epsilon: f64) -> (f64, f64) {
    let e = (-epsilon).exp();
    (1.0 / (1.0 + e), e / (1.0 + e))
}

/// Output index of `(y, j, l)` in a law over a `k x m` sketch.
pub fn output_index(y: i8, j: usize, l: usize, m: usize) -> usize {
    (j * m + l) * 2 + (y < 0) as usize
}

/// Law of the plain client for per-row codes `(bucket, sign)`, on denominator `k m^2`.
pub fn client_law(codes: &[(usize, i8)], m: usize) -> OutputLaw {
    let k = codes.len();
    let mut cells = vec![[0u64; 2]; 2 * k * m];
    for (j, &(bucket, sign)) in codes.iter().enumerate() {
        for l in 0..m {
            let w = hadamard_sign(bucket, l) * sign;
            cells[output_index(w, j, l, m)][0] += m as u64;
            cells[output_index(-w, j, l, m)][1] += m as u64;
        }
    }
    OutputLaw { denom: (k * m * m) as u64, cells }
}

/// Law of a frequency-aware client for a non-target value, on denominator `k m^2`.
pub fn fap_nontarget_law(k: usize, m: usize) -> OutputLaw {
    let mut cells = vec![[0u64; 2]; 2 * k * m];
    for j in 0..k {
        for l in 0..m {
            for r in 0..m {
                let w = hadamard_sign(r, l);
                cells[output_index(w, j, l, m)][0] += 1;
                cells[output_index(-w, j, l, m)][1] += 1;
            }
        }
    }
    OutputLaw { denom: (k * m * m) as u64, cells }
}

/// Law of the plain client for a concrete value under `family`.
pub fn law_for_value(d: u64, family: &HashFamily) -> OutputLaw {
    let codes: Vec<_> = family.rows().iter().map(|r| (r.eval_h(d), r.eval_xi(d))).collect();
    client_law(&codes, family.m())
}

/// Per-row codes of a middle-table tuple: `(h_A, xi_A, h_B, xi_B)`.
pub type TupleCode = (usize, i8, usize, i8);

/// Output index of `(y, j, l1, l2)`.
pub fn output_index_2d(y: i8, j: usize, l1: usize, l2: usize, m1: usize, m2: usize) -> usize {
    ((j * m1 + l1) * m2 + l2) * 2 + (y < 0) as usize
}

/// Law of the two-dimensional client, on denominator `k m1 m2`.
pub fn client_law_2d(codes: &[TupleCode], m1: usize, m2: usize) -> OutputLaw {
    let k = codes.len();
    let mut cells = vec![[0u64; 2]; 2 * k * m1 * m2];
    for (j, &(ha, sa, hb, sb)) in codes.iter().enumerate() {
        for l1 in 0..m1 {
            for l2 in 0..m2 {
                let w = hadamard_sign(ha, l1) * sa * sb * hadamard_sign(l2, hb);
                cells[output_index_2d(w, j, l1, l2, m1, m2)][0] += 1;
                cells[output_index_2d(-w, j, l1, l2, m1, m2)][1] += 1;
            }
        }
    }
    OutputLaw { denom: (k * m1 * m2) as u64, cells }
}

fn cartesian<T: Clone>(alphabet: &[T], k: usize) -> Result<Vec<Vec<T>>> {
    let total = (alphabet.len() as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > MAX_CODES as u128 {
        return Err(Error::InvalidParameter(format!("{total} input codes exceed the enumeration limit")));
    }
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                alphabet.iter().map(move |a| {
                    let mut v = prefix.clone();
                    v.push(a.clone());
                    v
                })
            })
            .collect();
    }
    Ok(out)
}

/// Every per-row code vector for a `k x m` sketch.
pub fn all_row_codes(k: usize, m: usize) -> Result<Vec<Vec<(usize, i8)>>> {
    let alphabet: Vec<_> = (0..m).flat_map(|b| [(b, 1i8), (b, -1i8)]).collect();
    cartesian(&alphabet, k)
}

/// Every per-row tuple code vector for a `k x m1 x m2` middle sketch.
pub fn all_tuple_codes(k: usize, m1: usize, m2: usize) -> Result<Vec<Vec<TupleCode>>> {
    let mut alphabet = Vec::new();
    for ha in 0..m1 {
        for hb in 0..m2 {
            for sa in [1i8, -1] {
                for sb in [1i8, -1] {
                    alphabet.push((ha, sa, hb, sb));
                }
            }
        }
    }
    cartesian(&alphabet, k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdpAudit {
    pub epsilon: f64,
    pub inputs: usize,
    pub outputs: usize,
    /// Largest `Pr[o | x] / Pr[o | x']` over all outputs and input pairs.
    pub max_ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Checks every ordered pair of laws against `e^eps`.
pub fn audit_laws(laws: &[OutputLaw], epsilon: f64) -> Result<LdpAudit> {
    let first = laws.first().ok_or(Error::EmptyDomain)?;
    if laws.iter().any(|l| l.denom != first.denom || l.cells.len() != first.cells.len()) {
        return Err(Error::InvalidParameter("laws over different output spaces".into()));
    }
    let t = epsilon.exp();
    let outputs = first.cells.len();
    let mut max_ratio = 0.0f64;
    let mut holds = true;
    for o in 0..outputs {
        // the extreme pair for output o is (largest weight, smallest weight)
        let (mut hi, mut lo) = (0, 0);
        for (i, law) in laws.iter().enumerate() {
            if law.weight(o, t) > laws[hi].weight(o, t) {
                hi = i;
            }
            if law.weight(o, t) < laws[lo].weight(o, t) {
                lo = i;
            }
        }
        let (num, den) = (laws[hi].weight(o, t), laws[lo].weight(o, t));
        if den == 0.0 {
            if num > 0.0 {
                return Ok(LdpAudit {
                    epsilon,
                    inputs: laws.len(),
                    outputs,
                    max_ratio: f64::INFINITY,
                    bound: t,
                    holds: false,
                });
            }
            continue;
        }
        max_ratio = max_ratio.max(num / den);
        holds &= num <= t * den;
    }
    Ok(LdpAudit { epsilon, inputs: laws.len(), outputs, max_ratio, bound: t, holds })
}

/// Plain client over all code vectors of a `k x m` sketch.
pub fn audit_client(k: usize, m: usize, epsilon: f64) -> Result<LdpAudit> {
    let laws: Vec<_> = all_row_codes(k, m)?.iter().map(|c| client_law(c, m)).collect();
    audit_laws(&laws, epsilon)
}

/// Frequency-aware client: every target code vector plus the non-target law.
pub fn audit_fap(k: usize, m: usize, epsilon: f64) -> Result<LdpAudit> {
    let mut laws: Vec<_> = all_row_codes(k, m)?.iter().map(|c| client_law(c, m)).collect();
    laws.push(fap_nontarget_law(k, m));
    audit_laws(&laws, epsilon)
}

/// Middle-table client over all tuple code vectors.
pub fn audit_client_2d(k: usize, m1: usize, m2: usize, epsilon: f64) -> Result<LdpAudit> {
    let laws: Vec<_> = all_tuple_codes(k, m1, m2)?.iter().map(|c| client_law_2d(c, m1, m2)).collect();
    audit_laws(&laws, epsilon)
}
