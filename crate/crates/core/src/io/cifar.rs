//! Reader for the CIFAR-10 binary format: each record is one label byte
//! followed by 3072 pixel bytes (three 32x32 channel planes). Pixels are
//! scaled to [0, 1].

use std::path::Path;

use ndarray::Array4;

use crate::error::{Error, Result};

pub const RECORD_BYTES: usize = 3073;
pub const IMAGE_SHAPE: (usize, usize, usize) = (3, 32, 32);

/// Loads one or more record files into an NCHW tensor plus labels.
pub fn read_cifar_binary(paths: &[impl AsRef<Path>]) -> Result<(Array4<f64>, Vec<u16>)> {
    if paths.is_empty() {
        return Err(Error::Config("no dataset files given".into()));
    }
    let mut records: Vec<Vec<u8>> = Vec::new();
    for p in paths {
        let bytes = std::fs::read(p.as_ref())?;
        if bytes.is_empty() || bytes.len() % RECORD_BYTES != 0 {
            return Err(Error::Format(format!(
                "{}: length {} is not a positive multiple of the {RECORD_BYTES}-byte record",
                p.as_ref().display(),
                bytes.len()
            )));
        }
        for chunk in bytes.chunks_exact(RECORD_BYTES) {
            records.push(chunk.to_vec());
        }
    }

    let n = records.len();
    let (c, h, w) = IMAGE_SHAPE;
    let mut data = Array4::zeros((n, c, h, w));
    let mut labels = Vec::with_capacity(n);
    for (i, rec) in records.iter().enumerate() {
        labels.push(rec[0] as u16);
        for ch in 0..c {
            for y in 0..h {
                for x in 0..w {
                    let byte = rec[1 + ch * h * w + y * w + x];
                    data[[i, ch, y, x]] = byte as f64 / 255.0;
                }
            }
        }
    }
    Ok((data, labels))
}
