// SPDX-License-Identifier: Apache-2.0

//! Sketch snapshot files.
//!
//! ```text
//! offset  size  field
//!      0     8  magic "LDPJSKT1"
//!      8     4  k            u32 LE
//!     12     4  m            u32 LE
//!     16     8  epsilon      f64 LE (IEEE-754)
//!     24     8  master seed  u64 LE
//!     32     1  restored     0 | 1
//!     33     1  mode         0 | 'H' | 'L'
//!     34     1  signed       1 = xi enabled, 0 = unsigned encoding
//!     35     8  n_reports    u64 LE
//!     43  8*km  counters     f64 LE, row-major
//! ```
//!
//! Unrestored sketches store `k * c_eps * sums`; reading recovers the exact sums.

use std::io::{Read, Write};

use super::{Cells, PrivateSketch};
use crate::client::{FapMode, SketchParams};
use crate::error::{Error, Result};
use crate::hashing::derive_family;

const MAGIC: &[u8; 8] = b"LDPJSKT1";
const HEADER_LEN: usize = 43;

pub fn write_snapshot<W: Write>(mut out: W, sketch: &PrivateSketch) -> Result<()> {
    let p = sketch.params();
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&(p.k as u32).to_le_bytes());
    header.extend_from_slice(&(p.m as u32).to_le_bytes());
    header.extend_from_slice(&p.epsilon.to_le_bytes());
    header.extend_from_slice(&p.master_seed.to_le_bytes());
    header.push(sketch.is_restored() as u8);
    header.push(sketch.mode().map_or(0, FapMode::tag));
    header.push(sketch.family().is_signed() as u8);
    header.extend_from_slice(&sketch.n_reports().to_le_bytes());
    out.write_all(&header)?;
    for c in sketch.counters() {
        out.write_all(&c.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(mut input: R) -> Result<PrivateSketch> {
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
    let u64_at = |i: usize| u64::from_le_bytes(header[i..i + 8].try_into().unwrap());
    let params = SketchParams::new(u32_at(8), u32_at(12), f64::from_bits(u64_at(16)), u64_at(24))?;
    let restored = match header[32] {
        0 => false,
        1 => true,
        b => return Err(Error::Snapshot(format!("bad restored flag {b}"))),
    };
    let mode = match header[33] {
        0 => None,
        t => Some(FapMode::from_tag(t).ok_or_else(|| Error::Snapshot(format!("bad mode tag {t}")))?),
    };
    let mut family = derive_family(&params)?;
    match header[34] {
        1 => {}
        0 => family = family.without_xi(),
        b => return Err(Error::Snapshot(format!("bad signed flag {b}"))),
    }
    let n_reports = u64_at(35);

    let cells_len = params.k * params.m;
    let mut body = Vec::with_capacity(cells_len * 8);
    input.read_to_end(&mut body)?;
    if body.len() != cells_len * 8 {
        return Err(Error::Snapshot(format!("expected {} counter bytes, found {}", cells_len * 8, body.len())));
    }
    let values: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let cells = if restored {
        Cells::Restored(values)
    } else {
        let scale = params.report_scale();
        let sums = values
            .iter()
            .map(|&v| {
                let s = (v / scale).round();
                if s.abs() < 9.0e15 && s * scale == v {
                    Ok(s as i64)
                } else {
                    Err(Error::Snapshot(format!("counter {v} is not a multiple of the report scale")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Cells::Raw(sums)
    };
    Ok(PrivateSketch { params, family, cells, n_reports, mode })
}
