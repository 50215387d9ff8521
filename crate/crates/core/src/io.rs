//! On-disk artifacts: the diagnostics CSV and the final-state dump.
//!
//! `final_state.bin` layout, all little-endian:
//!
//! ```text
//! [0..8)    magic  b"FFSTATE1"
//! [8..12)   u32    n (dimension)
//! [12..16)  u32    N (points per dimension)
//! [16..24)  f64    L (period)
//! [24..32)  f64    t
//! [32..)    f64    N^n values, row-major
//! ```

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::spectral::{ScalarField, TorusGrid};

pub const STATE_MAGIC: &[u8; 8] = b"FFSTATE1";

pub fn write_diagnostics_csv(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(DiagnosticsRecord::CSV_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for r in records {
        out.write_all(r.csv_row().as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn encode_state(theta: &ScalarField, t: f64) -> Vec<u8> {
    let grid = theta.grid();
    let mut buf = Vec::with_capacity(32 + 8 * grid.len());
    buf.extend_from_slice(STATE_MAGIC);
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.points_per_dim() as u32).to_le_bytes());
    buf.extend_from_slice(&grid.period().to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    for v in theta.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_state(bytes: &[u8]) -> Result<(ScalarField, f64)> {
    if bytes.len() < 32 || &bytes[..8] != STATE_MAGIC {
        return Err(Error::Format("missing state header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (dim, points) = (u32_at(8), u32_at(12));
    let (period, t) = (f64_at(16), f64_at(24));
    let grid = TorusGrid::new(dim, points, period).map_err(|e| Error::Format(e.to_string()))?;
    if bytes.len() != 32 + 8 * grid.len() {
        return Err(Error::Format(format!(
            "expected {} bytes, found {}",
            32 + 8 * grid.len(),
            bytes.len()
        )));
    }
    let values = (0..grid.len()).map(|i| f64_at(32 + 8 * i)).collect();
    let theta = ScalarField::new(&grid, values).map_err(|e| Error::Format(e.to_string()))?;
    Ok((theta, t))
}

pub fn write_state(path: &Path, theta: &ScalarField, t: f64) -> Result<()> {
    let mut f = File::create(path)?;
    f.write_all(&encode_state(theta, t))?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<(ScalarField, f64)> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_state(&bytes)
}
