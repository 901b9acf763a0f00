// SPDX-License-Identifier: Apache-2.0

//! Chain joins `T1(A) ⋈ T2(A, B) ⋈ T3(B)` with two-dimensional private sketches.
//!
//! A middle-table tuple `(a, b)` is released as one signed coordinate of
//! `H_{m1}[h_A(a), ·] ⊗ H_{m2}[·, h_B(b)]` scaled by `xi_A(a) * xi_B(b)`, under a single
//! randomized-response flip for the whole tuple. Rows are sampled per report as in
//! the one-dimensional protocol, so the debias scale is `k * c_eps`.
//!
//! The end tables use ordinary [`PrivateSketch`]es built with the same families as
//! the corresponding side of the middle sketch.

use std::collections::HashMap;

use rand::RngCore;

use crate::client::{draw_flip, draw_index};
use crate::error::{Error, Result};
use crate::fagms::{frequencies, median};
use crate::hashing::{derive_family, fwht, hadamard_sign, HashFamily};
use crate::params::{flip_probability, SketchParams};
use crate::seeding::{client_rng, derive_seed, tags};
use crate::server::{build_sketch, PrivateSketch};

/// Parameters for the two join attributes of a middle table. Both sides share
/// `k` and `epsilon`; widths and seeds may differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairParams {
    pub a: SketchParams,
    pub b: SketchParams,
}

impl PairParams {
    pub fn new(a: SketchParams, b: SketchParams) -> Result<Self> {
        if a.k != b.k {
            return Err(Error::InvalidParameter(format!("row counts differ: {} vs {}", a.k, b.k)));
        }
        if a.epsilon != b.epsilon {
            return Err(Error::InvalidParameter("privacy budgets differ".into()));
        }
        Ok(PairParams { a, b })
    }

    pub fn k(&self) -> usize {
        self.a.k
    }

    pub fn epsilon(&self) -> f64 {
        self.a.epsilon
    }

    pub fn report_scale(&self) -> f64 {
        self.a.report_scale()
    }
}

/// A middle-table tuple's release.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PerturbedReport2D {
    pub y: i8,
    pub j: u16,
    pub l1: u32,
    pub l2: u32,
}

/// Perturbs the tuple `(a, b)`. Consumes four draws: `j`, `l1`, `l2`, flip.
pub fn client_perturb_2d<R: RngCore + ?Sized>(
    a: u64,
    b: u64,
    params: &PairParams,
    family_a: &HashFamily,
    family_b: &HashFamily,
    rng: &mut R,
) -> PerturbedReport2D {
    let j = draw_index(rng, params.k());
    let l1 = draw_index(rng, params.a.m);
    let l2 = draw_index(rng, params.b.m);
    let (ra, rb) = (family_a.row(j), family_b.row(j));
    let w = hadamard_sign(ra.eval_h(a), l1) * ra.eval_xi(a) * rb.eval_xi(b) * hadamard_sign(l2, rb.eval_h(b));
    let flip = draw_flip(rng, flip_probability(params.epsilon()));
    PerturbedReport2D { y: flip * w, j: j as u16, l1: l1 as u32, l2: l2 as u32 }
}

#[derive(Debug, Clone, PartialEq)]
enum Cells {
    Raw(Vec<i64>),
    Restored(Vec<f64>),
}

/// `k` tensors of shape `m1 x m2`, row-major per tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateSketch2D {
    params: PairParams,
    family_a: HashFamily,
    family_b: HashFamily,
    cells: Cells,
    n_reports: u64,
}

impl PrivateSketch2D {
    pub fn new(params: PairParams, family_a: HashFamily, family_b: HashFamily) -> Result<Self> {
        crate::server::check_family(&params.a, &family_a)?;
        crate::server::check_family(&params.b, &family_b)?;
        let len = params.k() * params.a.m * params.b.m;
        Ok(PrivateSketch2D { params, family_a, family_b, cells: Cells::Raw(vec![0; len]), n_reports: 0 })
    }

    pub fn params(&self) -> &PairParams {
        &self.params
    }

    pub fn family_a(&self) -> &HashFamily {
        &self.family_a
    }

    pub fn family_b(&self) -> &HashFamily {
        &self.family_b
    }

    pub fn n_reports(&self) -> u64 {
        self.n_reports
    }

    pub fn is_restored(&self) -> bool {
        matches!(self.cells, Cells::Restored(_))
    }

    fn tensor_len(&self) -> usize {
        self.params.a.m * self.params.b.m
    }

    pub fn add(&mut self, report: &PerturbedReport2D) -> Result<()> {
        let (k, m1, m2) = (self.params.k(), self.params.a.m, self.params.b.m);
        let (j, l1, l2) = (report.j as usize, report.l1 as usize, report.l2 as usize);
        if j >= k || l1 >= m1 || l2 >= m2 {
            return Err(Error::ReportOutOfRange { row: j, col: l1 * m2 + l2, depth: k, width: m1 * m2 });
        }
        if report.y != 1 && report.y != -1 {
            return Err(Error::InvalidSign(report.y));
        }
        match &mut self.cells {
            Cells::Raw(sums) => sums[(j * m1 + l1) * m2 + l2] += report.y as i64,
            Cells::Restored(_) => return Err(Error::AlreadyRestored),
        }
        self.n_reports += 1;
        Ok(())
    }

    pub fn extend<'r>(&mut self, reports: impl IntoIterator<Item = &'r PerturbedReport2D>) -> Result<()> {
        reports.into_iter().try_for_each(|r| self.add(r))
    }

    /// `M_j <- k * c_eps * H_{m1}^T M_j H_{m2}^T` for every tensor. Allowed once.
    pub fn restore(&mut self) -> Result<()> {
        let (m1, m2) = (self.params.a.m, self.params.b.m);
        let tensor_len = self.tensor_len();
        let Cells::Raw(sums) = &mut self.cells else {
            return Err(Error::AlreadyRestored);
        };
        let mut column = vec![0i64; m1];
        for tensor in sums.chunks_exact_mut(tensor_len) {
            for row in tensor.chunks_exact_mut(m2) {
                fwht(row);
            }
            for c in 0..m2 {
                for (r, slot) in column.iter_mut().enumerate() {
                    *slot = tensor[r * m2 + c];
                }
                fwht(&mut column);
                for (r, &v) in column.iter().enumerate() {
                    tensor[r * m2 + c] = v;
                }
            }
        }
        let scale = self.params.report_scale();
        self.cells = Cells::Restored(sums.iter().map(|&s| s as f64 * scale).collect());
        Ok(())
    }

    pub fn merge(&self, other: &PrivateSketch2D) -> Result<PrivateSketch2D> {
        if self.params != other.params {
            return Err(Error::ParamsMismatch);
        }
        if self.family_a != other.family_a || self.family_b != other.family_b {
            return Err(Error::FamilyMismatch);
        }
        let (Cells::Raw(a), Cells::Raw(b)) = (&self.cells, &other.cells) else {
            return Err(Error::AlreadyRestored);
        };
        Ok(PrivateSketch2D {
            params: self.params,
            family_a: self.family_a.clone(),
            family_b: self.family_b.clone(),
            cells: Cells::Raw(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            n_reports: self.n_reports + other.n_reports,
        })
    }

    /// Tensor `j` of a restored sketch, row-major `m1 x m2`.
    pub fn tensor(&self, j: usize) -> Result<&[f64]> {
        let len = self.tensor_len();
        match &self.cells {
            Cells::Restored(c) => Ok(&c[j * len..(j + 1) * len]),
            Cells::Raw(_) => Err(Error::NotRestored),
        }
    }

    /// `M_j[h_A(a), h_B(b)] * xi_A(a) * xi_B(b)` averaged over rows: a tuple-frequency estimate.
    pub fn estimate_tuple_frequency(&self, a: u64, b: u64) -> Result<f64> {
        let m2 = self.params.b.m;
        let mut sum = 0.0;
        for j in 0..self.params.k() {
            let (ra, rb) = (self.family_a.row(j), self.family_b.row(j));
            let cell = self.tensor(j)?[ra.eval_h(a) * m2 + rb.eval_h(b)];
            sum += cell * (ra.eval_xi(a) * rb.eval_xi(b)) as f64;
        }
        Ok(sum / self.params.k() as f64)
    }
}

/// Builds and restores a middle-table sketch.
pub fn prisk_build_2d<'r>(
    reports: impl IntoIterator<Item = &'r PerturbedReport2D>,
    params: &PairParams,
    family_a: &HashFamily,
    family_b: &HashFamily,
) -> Result<PrivateSketch2D> {
    let mut sketch = PrivateSketch2D::new(*params, family_a.clone(), family_b.clone())?;
    sketch.extend(reports)?;
    sketch.restore()?;
    Ok(sketch)
}

/// Per-row `v1^T M_2 ... M_r v_last`, median over rows.
pub fn chain_join_est_path(first: &PrivateSketch, middles: &[&PrivateSketch2D], last: &PrivateSketch) -> Result<f64> {
    let mut left = first.family();
    for mid in middles {
        if mid.family_a() != left {
            return Err(Error::FamilyMismatch);
        }
        left = mid.family_b();
    }
    if last.family() != left {
        return Err(Error::FamilyMismatch);
    }
    let k = first.params().k;
    let mut rows = Vec::with_capacity(k);
    for j in 0..k {
        let mut acc: Vec<f64> = first.row(j)?.to_vec();
        for mid in middles {
            let (m1, m2) = (mid.params.a.m, mid.params.b.m);
            let tensor = mid.tensor(j)?;
            let mut next = vec![0.0; m2];
            for (l1, &w) in acc.iter().enumerate().take(m1) {
                if w == 0.0 {
                    continue;
                }
                for (slot, &c) in next.iter_mut().zip(&tensor[l1 * m2..(l1 + 1) * m2]) {
                    *slot += w * c;
                }
            }
            acc = next;
        }
        rows.push(acc.iter().zip(last.row(j)?).map(|(x, y)| x * y).sum());
    }
    Ok(median(&mut rows))
}

/// `median_j sum_{l1,l2} M1[j,l1] * M2[j,l1,l2] * M3[j,l2]`.
pub fn chain_join_est(m1: &PrivateSketch, m2: &PrivateSketch2D, m3: &PrivateSketch) -> Result<f64> {
    chain_join_est_path(m1, &[m2], m3)
}

/// Exact size of `T1 ⋈ T2 ⋈ ... ⋈ T_last` along a chain of two-column middle tables.
pub fn true_chain_join_path(first: &[u64], middles: &[&[(u64, u64)]], last: &[u64]) -> u128 {
    let mut weights: HashMap<u64, u128> = frequencies(first).into_iter().map(|(v, c)| (v, c as u128)).collect();
    for mid in middles {
        let mut next: HashMap<u64, u128> = HashMap::new();
        for &(a, b) in mid.iter() {
            if let Some(&w) = weights.get(&a) {
                *next.entry(b).or_insert(0) += w;
            }
        }
        weights = next;
    }
    frequencies(last)
        .into_iter()
        .map(|(v, c)| weights.get(&v).copied().unwrap_or(0) * c as u128)
        .sum()
}

/// Exact `|T1 ⋈ T2 ⋈ T3|`.
pub fn true_chain_join(t1: &[u64], t2: &[(u64, u64)], t3: &[u64]) -> u128 {
    true_chain_join_path(t1, &[t2], t3)
}

/// Private three-way chain-join estimate with all tables perturbed client-side.
pub fn ldp_chain_join(t1: &[u64], t2: &[(u64, u64)], t3: &[u64], params: &PairParams, run_seed: u64) -> Result<f64> {
    let family_a = derive_family(&params.a)?;
    let family_b = derive_family(&params.b)?;
    let indexed = |v: &[u64]| v.iter().enumerate().map(|(i, &d)| (i as u64, d)).collect::<Vec<_>>();
    let m1 = build_sketch(indexed(t1), &params.a, &family_a, derive_seed(run_seed, tags::ATTR_A))?;
    let m3 = build_sketch(indexed(t3), &params.b, &family_b, derive_seed(run_seed, tags::ATTR_B))?;
    let stream = derive_seed(run_seed, tags::MIDDLE);
    let mut m2 = PrivateSketch2D::new(*params, family_a.clone(), family_b.clone())?;
    for (i, &(a, b)) in t2.iter().enumerate() {
        let report = client_perturb_2d(a, b, params, &family_a, &family_b, &mut client_rng(stream, i as u64));
        m2.add(&report)?;
    }
    m2.restore()?;
    chain_join_est(&m1, &m2, &m3)
}
