//! Big-endian IDX containers (the MNIST distribution format). Only the
//! unsigned-byte element type is supported.

use std::path::Path;

use super::lowrank::{DataMatrix, Provenance};
use crate::error::{Error, Result};

const TYPE_U8: u8 = 0x08;
pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxTensor {
    pub dims: Vec<u32>,
    pub data: Vec<u8>,
}

impl IdxTensor {
    pub fn magic(&self) -> u32 {
        ((TYPE_U8 as u32) << 8) | self.dims.len() as u32
    }
}

fn parse_err(offset: usize, msg: impl Into<String>) -> Error {
    Error::Parse { offset, msg: msg.into() }
}

pub fn read_idx(bytes: &[u8]) -> Result<IdxTensor> {
    if bytes.len() < 4 {
        return Err(parse_err(bytes.len(), "truncated header"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(parse_err(0, format!("bad magic {:02x}{:02x}", bytes[0], bytes[1])));
    }
    if bytes[2] != TYPE_U8 {
        return Err(parse_err(2, format!("unsupported element type 0x{:02x}", bytes[2])));
    }
    let nd = bytes[3] as usize;
    if nd == 0 {
        return Err(parse_err(3, "zero dimensions"));
    }
    let header = 4 + 4 * nd;
    if bytes.len() < header {
        return Err(parse_err(bytes.len(), "truncated dimension list"));
    }
    let dims: Vec<u32> =
        bytes[4..header].chunks_exact(4).map(|c| u32::from_be_bytes([c[0], c[1], c[2], c[3]])).collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d as usize))
        .ok_or_else(|| parse_err(4, "element count overflows"))?;
    let body = &bytes[header..];
    if body.len() < count {
        return Err(parse_err(bytes.len(), format!("truncated data: need {count} bytes, have {}", body.len())));
    }
    if body.len() > count {
        return Err(parse_err(header + count, "trailing bytes after data"));
    }
    Ok(IdxTensor { dims, data: body.to_vec() })
}

pub fn write_idx(t: &IdxTensor) -> Result<Vec<u8>> {
    let count: usize = t.dims.iter().map(|d| *d as usize).product();
    if t.dims.is_empty() || t.dims.len() > 255 || count != t.data.len() {
        return Err(Error::InvalidArgument("tensor shape does not match its data".into()));
    }
    let mut out = Vec::with_capacity(4 + 4 * t.dims.len() + count);
    out.extend_from_slice(&t.magic().to_be_bytes());
    for d in &t.dims {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(&t.data);
    Ok(out)
}

pub fn idx_write(path: impl AsRef<Path>, t: &IdxTensor) -> Result<()> {
    std::fs::write(path, write_idx(t)?)?;
    Ok(())
}

/// Loads a 3-D image file as a (rows·cols)×count matrix, one image per
/// column, scaled to [0, 1].
pub fn idx_load(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let t = read_idx(&std::fs::read(path)?)?;
    if t.magic() != IMAGE_MAGIC {
        return Err(parse_err(0, format!("expected magic {IMAGE_MAGIC:#010x}, got {:#010x}", t.magic())));
    }
    let count = t.dims[0] as usize;
    let pixels = t.dims[1] as usize * t.dims[2] as usize;
    let mut entries = vec![0.0; pixels * count];
    for (img, chunk) in t.data.chunks_exact(pixels.max(1)).enumerate() {
        for (p, byte) in chunk.iter().enumerate() {
            entries[p * count + img] = *byte as f64 / 255.0;
        }
    }
    DataMatrix::new(pixels, count, entries, Provenance::IdxFile)
}

pub fn idx_load_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let t = read_idx(&std::fs::read(path)?)?;
    if t.magic() != LABEL_MAGIC {
        return Err(parse_err(0, format!("expected magic {LABEL_MAGIC:#010x}, got {:#010x}", t.magic())));
    }
    Ok(t.data)
}

/// Keeps the columns whose label equals `class`.
pub fn filter_columns(a: &DataMatrix, labels: &[u8], class: u8) -> Result<DataMatrix> {
    if labels.len() != a.cols {
        return Err(Error::DimensionMismatch { expected: a.cols, got: labels.len() });
    }
    let keep: Vec<usize> = (0..a.cols).filter(|j| labels[*j] == class).collect();
    let mut entries = Vec::with_capacity(a.rows * keep.len());
    for i in 0..a.rows {
        entries.extend(keep.iter().map(|j| a.get(i, *j)));
    }
    DataMatrix::new(a.rows, keep.len(), entries, a.provenance)
}
