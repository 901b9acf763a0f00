// SPDX-License-Identifier: Apache-2.0

//! The untrusted aggregator.
//!
//! A [`PrivateSketch`] accumulates reports and, once every report is in, is restored
//! by a Hadamard transform of each row. Before restore the sketch holds exact integer
//! sums of report signs per cell; the `k * c_eps` scale is applied when restoring, so
//! partial sketches merge exactly in any order.

mod frequent;
mod pipeline;
mod snapshot;

pub use frequent::{find_frequent_items, FrequentItemSet};
pub use pipeline::{
    build_fap_sketch, build_sketch, join_est, ldp_join_sketch, ldp_join_sketch_plus, ldp_sketch_pair,
    JoinEstimate, NonTargetCorrection, PlusConfig,
};
pub use snapshot::{read_snapshot, write_snapshot};

use crate::client::{FapMode, PerturbedReport, SketchParams};
use crate::error::{Error, Result};
use crate::fagms::median;
use crate::hashing::{fwht, HashFamily};

#[derive(Debug, Clone, PartialEq)]
enum Cells {
    /// Per-cell sum of report signs.
    Raw(Vec<i64>),
    /// `k * c_eps * (sums x H_m^T)`.
    Restored(Vec<f64>),
}

/// A `k x m` private sketch built from perturbed reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivateSketch {
    params: SketchParams,
    family: HashFamily,
    cells: Cells,
    n_reports: u64,
    mode: Option<FapMode>,
}

pub(crate) fn check_family(params: &SketchParams, family: &HashFamily) -> Result<()> {
    if family.k() != params.k || family.m() != params.m || family.master_seed() != params.master_seed {
        return Err(Error::FamilyMismatch);
    }
    Ok(())
}

impl PrivateSketch {
    /// An empty, unrestored sketch.
    pub fn new(params: SketchParams, family: HashFamily) -> Result<Self> {
        check_family(&params, &family)?;
        let cells = Cells::Raw(vec![0; params.k * params.m]);
        Ok(PrivateSketch { params, family, cells, n_reports: 0, mode: None })
    }

    /// Tags the sketch as built from frequency-aware reports of `mode`.
    pub fn with_mode(mut self, mode: FapMode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn n_reports(&self) -> u64 {
        self.n_reports
    }

    pub fn mode(&self) -> Option<FapMode> {
        self.mode
    }

    pub fn is_restored(&self) -> bool {
        matches!(self.cells, Cells::Restored(_))
    }

    /// Accumulates one report.
    pub fn add(&mut self, report: &PerturbedReport) -> Result<()> {
        let (j, l) = (report.j as usize, report.l as usize);
        let (k, m) = (self.params.k, self.params.m);
        if j >= k || l >= m {
            return Err(Error::ReportOutOfRange { row: j, col: l, depth: k, width: m });
        }
        if report.y != 1 && report.y != -1 {
            return Err(Error::InvalidSign(report.y));
        }
        match &mut self.cells {
            Cells::Raw(sums) => sums[j * m + l] += report.y as i64,
            Cells::Restored(_) => return Err(Error::AlreadyRestored),
        }
        self.n_reports += 1;
        Ok(())
    }

    pub fn extend<'r>(&mut self, reports: impl IntoIterator<Item = &'r PerturbedReport>) -> Result<()> {
        reports.into_iter().try_for_each(|r| self.add(r))
    }

    /// Applies `M <- k * c_eps * M x H_m^T`. Allowed exactly once.
    pub fn restore(&mut self) -> Result<()> {
        let Cells::Raw(sums) = &mut self.cells else {
            return Err(Error::AlreadyRestored);
        };
        let m = self.params.m;
        for row in sums.chunks_exact_mut(m) {
            fwht(row);
        }
        let scale = self.params.report_scale();
        let restored = sums.iter().map(|&s| s as f64 * scale).collect();
        self.cells = Cells::Restored(restored);
        Ok(())
    }

    /// Cell-wise sum of two unrestored sketches.
    pub fn merge(&self, other: &PrivateSketch) -> Result<PrivateSketch> {
        if self.params != other.params {
            return Err(Error::ParamsMismatch);
        }
        if self.family != other.family {
            return Err(Error::FamilyMismatch);
        }
        if self.mode != other.mode {
            return Err(Error::ModeMismatch {
                expected: self.mode.or(other.mode).unwrap_or(FapMode::Low),
                found: other.mode,
            });
        }
        let (Cells::Raw(a), Cells::Raw(b)) = (&self.cells, &other.cells) else {
            return Err(Error::AlreadyRestored);
        };
        let sums = a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(PrivateSketch {
            params: self.params,
            family: self.family.clone(),
            cells: Cells::Raw(sums),
            n_reports: self.n_reports + other.n_reports,
            mode: self.mode,
        })
    }

    /// Counter matrix, row-major. Before restore this is `k * c_eps * sums`.
    pub fn counters(&self) -> Vec<f64> {
        match &self.cells {
            Cells::Raw(sums) => {
                let scale = self.params.report_scale();
                sums.iter().map(|&s| s as f64 * scale).collect()
            }
            Cells::Restored(c) => c.clone(),
        }
    }

    /// Exact per-cell sign sums of an unrestored sketch.
    pub fn raw_sums(&self) -> Option<&[i64]> {
        match &self.cells {
            Cells::Raw(s) => Some(s),
            Cells::Restored(_) => None,
        }
    }

    fn restored(&self) -> Result<&[f64]> {
        match &self.cells {
            Cells::Restored(c) => Ok(c),
            Cells::Raw(_) => Err(Error::NotRestored),
        }
    }

    /// Row `j` of a restored sketch.
    pub fn row(&self, j: usize) -> Result<&[f64]> {
        let m = self.params.m;
        Ok(&self.restored()?[j * m..(j + 1) * m])
    }

    /// `mean_j M[j, h_j(d)] * xi_j(d)`.
    pub fn estimate_frequency(&self, d: u64) -> Result<f64> {
        let cells = self.restored()?;
        let m = self.params.m;
        let sum: f64 = self
            .family
            .rows()
            .iter()
            .enumerate()
            .map(|(j, row)| cells[j * m + row.eval_h(d)] * row.eval_xi(d) as f64)
            .sum();
        let mean = sum / self.params.k as f64;
        if self.family.is_signed() {
            return Ok(mean);
        }
        // unsigned encoding: every other report adds 1/m to each bucket in expectation
        let m = m as f64;
        Ok(m / (m - 1.0) * (mean - self.n_reports as f64 / m))
    }

    /// Per-row `sum_x (A[j,x] - shift_a) * (B[j,x] - shift_b)`.
    pub fn shifted_row_estimates(&self, other: &PrivateSketch, shift_a: f64, shift_b: f64) -> Result<Vec<f64>> {
        if self.family != other.family {
            return Err(Error::FamilyMismatch);
        }
        let (a, b) = (self.restored()?, other.restored()?);
        let m = self.params.m;
        Ok(a.chunks_exact(m)
            .zip(b.chunks_exact(m))
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - shift_a) * (y - shift_b)).sum())
            .collect())
    }

    pub fn row_estimates(&self, other: &PrivateSketch) -> Result<Vec<f64>> {
        self.shifted_row_estimates(other, 0.0, 0.0)
    }

    /// Median over rows of the row inner products.
    pub fn join(&self, other: &PrivateSketch) -> Result<f64> {
        Ok(median(&mut self.row_estimates(other)?))
    }
}

/// Builds and restores a sketch from a report stream.
pub fn prisk_build<'r>(
    reports: impl IntoIterator<Item = &'r PerturbedReport>,
    params: &SketchParams,
    family: &HashFamily,
) -> Result<PrivateSketch> {
    let mut sketch = PrivateSketch::new(*params, family.clone())?;
    sketch.extend(reports)?;
    sketch.restore()?;
    Ok(sketch)
}

/// Cell-wise sum of two unrestored sketches.
pub fn merge(a: &PrivateSketch, b: &PrivateSketch) -> Result<PrivateSketch> {
    a.merge(b)
}

/// `mean_j M[j, h_j(d)] * xi_j(d)` on a restored sketch.
pub fn estimate_frequency(sketch: &PrivateSketch, d: u64) -> Result<f64> {
    sketch.estimate_frequency(d)
}
