// SPDX-License-Identifier: Apache-2.0

//! Little-endian report records.
//!
//! ```text
//! 1-D record (7 bytes):  y: i8 | j: u16 | l: u32
//! 2-D record (11 bytes): y: i8 | j: u16 | l1: u32 | l2: u32
//! ```
//!
//! Files are plain concatenations of records with no header.

use std::io::{Read, Write};

use crate::client::PerturbedReport;
use crate::error::{Error, Result};
use crate::multiway::PerturbedReport2D;

pub const REPORT_LEN: usize = 7;
pub const REPORT_2D_LEN: usize = 11;

fn check_sign(y: i8) -> Result<i8> {
    if y == 1 || y == -1 {
        Ok(y)
    } else {
        Err(Error::InvalidSign(y))
    }
}

impl PerturbedReport {
    pub fn to_bytes(&self) -> [u8; REPORT_LEN] {
        let mut out = [0u8; REPORT_LEN];
        out[0] = self.y as u8;
        out[1..3].copy_from_slice(&self.j.to_le_bytes());
        out[3..7].copy_from_slice(&self.l.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8; REPORT_LEN]) -> Result<Self> {
        Ok(PerturbedReport {
            y: check_sign(bytes[0] as i8)?,
            j: u16::from_le_bytes([bytes[1], bytes[2]]),
            l: u32::from_le_bytes([bytes[3], bytes[4], bytes[5], bytes[6]]),
        })
    }

    /// Payload size in bits of one encoded record.
    pub const fn wire_bits() -> usize {
        REPORT_LEN * 8
    }
}

impl PerturbedReport2D {
    pub fn to_bytes(&self) -> [u8; REPORT_2D_LEN] {
        let mut out = [0u8; REPORT_2D_LEN];
        out[0] = self.y as u8;
        out[1..3].copy_from_slice(&self.j.to_le_bytes());
        out[3..7].copy_from_slice(&self.l1.to_le_bytes());
        out[7..11].copy_from_slice(&self.l2.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8; REPORT_2D_LEN]) -> Result<Self> {
        let u32_at = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
        Ok(PerturbedReport2D {
            y: check_sign(bytes[0] as i8)?,
            j: u16::from_le_bytes([bytes[1], bytes[2]]),
            l1: u32_at(3),
            l2: u32_at(7),
        })
    }
}

pub fn write_reports<W: Write>(mut out: W, reports: &[PerturbedReport]) -> Result<()> {
    for r in reports {
        out.write_all(&r.to_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_reports_2d<W: Write>(mut out: W, reports: &[PerturbedReport2D]) -> Result<()> {
    for r in reports {
        out.write_all(&r.to_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_records<R: Read, const N: usize, T>(
    mut input: R,
    decode: impl Fn(&[u8; N]) -> Result<T>,
) -> Result<Vec<T>> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    if buf.len() % N != 0 {
        return Err(Error::InvalidParameter(format!(
            "report stream length {} is not a multiple of {N}",
            buf.len()
        )));
    }
    buf.chunks_exact(N)
        .map(|c| decode(c.try_into().expect("exact chunk")))
        .collect()
}

pub fn read_reports<R: Read>(input: R) -> Result<Vec<PerturbedReport>> {
    read_records(input, PerturbedReport::from_bytes)
}

pub fn read_reports_2d<R: Read>(input: R) -> Result<Vec<PerturbedReport2D>> {
    read_records(input, PerturbedReport2D::from_bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_little_endian() {
        let r = PerturbedReport { y: -1, j: 0x0102, l: 0x0a0b0c0d };
        assert_eq!(r.to_bytes(), [0xff, 0x02, 0x01, 0x0d, 0x0c, 0x0b, 0x0a]);
        let r2 = PerturbedReport2D { y: 1, j: 3, l1: 1, l2: 0x0100 };
        assert_eq!(r2.to_bytes(), [0x01, 3, 0, 1, 0, 0, 0, 0, 1, 0, 0]);
    }

    #[test]
    fn rejects_bad_sign_and_truncation() {
        assert!(matches!(
            PerturbedReport::from_bytes(&[0, 0, 0, 0, 0, 0, 0]),
            Err(Error::InvalidSign(0))
        ));
        assert!(read_reports(&[1u8, 0, 0][..]).is_err());
    }

    #[test]
    fn stream_round_trip() {
        let reports = vec![
            PerturbedReport { y: 1, j: 0, l: 0 },
            PerturbedReport { y: -1, j: 17, l: 1023 },
        ];
        let mut buf = Vec::new();
        write_reports(&mut buf, &reports).unwrap();
        assert_eq!(buf.len(), 2 * REPORT_LEN);
        assert_eq!(read_reports(&buf[..]).unwrap(), reports);
    }
}
