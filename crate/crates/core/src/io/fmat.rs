//! Binary feature container: magic "FMAT", version byte 1, u32 row and
//! column counts, row-major little-endian f64 values, then a label
//! presence flag and optional u16 labels. The flag byte is always
//! written; readers also accept legacy files that stop after the values.

use std::path::Path;

use ndarray::Array2;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};

use super::atomic_write;

const MAGIC: &[u8; 4] = b"FMAT";
const VERSION: u8 = 1;

pub fn to_bytes(fm: &FeatureMatrix) -> Vec<u8> {
    let rows = fm.rows();
    let cols = fm.cols();
    let mut out = Vec::with_capacity(4 + 1 + 8 + rows * cols * 8 + 1 + rows * 2);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for v in fm.array().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    match fm.labels() {
        Some(labels) => {
            out.push(1);
            for &l in labels {
                out.extend_from_slice(&l.to_le_bytes());
            }
        }
        None => out.push(0),
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < 13 {
        return Err(Error::Format("feature file shorter than its header".into()));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected FMAT".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::Format(format!(
            "unsupported feature file version {}",
            bytes[4]
        )));
    }
    let rows = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let value_bytes = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("header overflows".into()))?;
    let values_end = 13 + value_bytes;
    if bytes.len() < values_end {
        return Err(Error::Format(format!(
            "expected {value_bytes} value bytes, file has {}",
            bytes.len() - 13
        )));
    }

    let mut data = Array2::zeros((rows, cols));
    for (i, chunk) in bytes[13..values_end].chunks_exact(8).enumerate() {
        data[[i / cols, i % cols]] = f64::from_le_bytes(chunk.try_into().unwrap());
    }

    let rest = &bytes[values_end..];
    let labels = match rest {
        [] => None,
        [0] => None,
        [1, label_bytes @ ..] => {
            if label_bytes.len() != rows * 2 {
                return Err(Error::Format(format!(
                    "expected {} label bytes, found {}",
                    rows * 2,
                    label_bytes.len()
                )));
            }
            Some(
                label_bytes
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            )
        }
        [flag, ..] if *flag > 1 => {
            return Err(Error::Format(format!("bad label flag {flag}")));
        }
        _ => {
            return Err(Error::Format("trailing bytes after values".into()));
        }
    };
    FeatureMatrix::new(data, labels)
}

pub fn write_fmat(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    atomic_write(path, &to_bytes(fm))
}

pub fn read_fmat(path: &Path) -> Result<FeatureMatrix> {
    from_bytes(&std::fs::read(path)?)
}
