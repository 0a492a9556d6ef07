//! The TNSR binary tensor format: magic `TNSR`, version byte `1`, order byte
//! `d`, `d` little-endian `u32` dimensions, then the entries as little-endian
//! `f64` in C order. No padding, no checksum.

use std::fs;
use std::path::Path;

use tuckreg_core::{DenseTensor, Matrix};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"TNSR";
pub const VERSION: u8 = 1;

pub fn encode(t: &DenseTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(6 + 4 * t.order() + 8 * t.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(t.order() as u8);
    for &n in t.dims() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &x in t.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Parses a TNSR byte string; `path` only labels errors.
pub fn decode(bytes: &[u8], path: &Path) -> Result<DenseTensor> {
    let bad = |reason: String| Error::format(path, reason);
    if bytes.len() < 6 || bytes[..4] != MAGIC {
        return Err(bad("missing TNSR magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(bad(format!("unsupported TNSR version {}", bytes[4])));
    }
    let d = bytes[5] as usize;
    if d == 0 {
        return Err(bad("tensor order must be at least 1".into()));
    }
    let header = 6 + 4 * d;
    if bytes.len() < header {
        return Err(bad("truncated dimension list".into()));
    }
    let dims: Vec<usize> = bytes[6..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| bad("dimension product overflows".into()))?;
    if bytes.len() - header != 8 * len {
        return Err(bad(format!(
            "expected {} payload bytes for dims {dims:?}, found {}",
            8 * len,
            bytes.len() - header
        )));
    }
    let data = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    DenseTensor::new(dims, data).map_err(|e| bad(e.to_string()))
}

pub fn write(path: &Path, t: &DenseTensor) -> Result<()> {
    fs::write(path, encode(t)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<DenseTensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

/// Matrices are stored as order-2 tensors (row-major is C order).
pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write(path, &DenseTensor::new(vec![m.rows(), m.cols()], m.data().to_vec())?)
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    let t = read(path)?;
    if t.order() != 2 {
        return Err(Error::format(path, format!("expected an order-2 tensor, found order {}", t.order())));
    }
    let (r, c) = (t.dims()[0], t.dims()[1]);
    Ok(Matrix::new(r, c, t.into_data())?)
}
