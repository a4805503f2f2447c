//! Per-video feature matrix file (`.safv`).
//!
//! ```text
//! offset  size  field
//! 0       4     magic "SAFV"
//! 4       4     version, u32 LE (1)
//! 8       4     rows, u32 LE
//! 12      4     cols, u32 LE
//! 16      4     flags, u32 LE (bit 0: post-ReLU, other bits reserved = 0)
//! 20      4*r*c payload, IEEE-754 binary32 LE, row-major
//! ```

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::FeatureMatrix;

pub const MAGIC: [u8; 4] = *b"SAFV";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 20;
pub const FLAG_POST_RELU: u32 = 1;

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("4 bytes"))
}

/// Serializes raw row-major values, validating them first.
pub fn encode_raw(rows: usize, cols: usize, values: &[f32], post_relu: bool) -> Result<Vec<u8>> {
    if rows == 0 || cols == 0 {
        return Err(Error::Empty(
            "feature matrix must have at least one row and column",
        ));
    }
    if values.len() != rows * cols {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            actual: values.len(),
        });
    }
    let to_u32 = |v: usize| {
        u32::try_from(v).map_err(|_| Error::Format(format!("dimension {v} exceeds u32")))
    };
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: pos / cols,
            col: pos % cols,
        });
    }
    if post_relu {
        if let Some(pos) = values.iter().position(|&v| v < 0.0) {
            return Err(Error::Format(format!(
                "negative value at ({}, {}) in a post-ReLU matrix",
                pos / cols,
                pos % cols
            )));
        }
    }
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&to_u32(rows)?.to_le_bytes());
    out.extend_from_slice(&to_u32(cols)?.to_le_bytes());
    let flags = if post_relu { FLAG_POST_RELU } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn encode_feature_matrix(x: &FeatureMatrix) -> Result<Vec<u8>> {
    let values: Vec<f32> = x.data().iter().copied().collect();
    encode_raw(x.rows(), x.cols(), &values, x.post_relu())
}

pub fn decode_feature_matrix(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes, need {HEADER_LEN}",
            bytes.len()
        )));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected \"SAFV\"",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = u32_at(bytes, 8) as usize;
    let cols = u32_at(bytes, 12) as usize;
    let flags = u32_at(bytes, 16);
    if flags & !FLAG_POST_RELU != 0 {
        return Err(Error::Format(format!("reserved flag bits set: {flags:#x}")));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty shape {rows}x{cols}")));
    }
    let expected = (rows as u64) * (cols as u64) * 4;
    let payload = (bytes.len() - HEADER_LEN) as u64;
    if payload < expected {
        return Err(Error::Format(format!(
            "truncated payload: {rows}x{cols} needs {expected} bytes, got {payload}"
        )));
    }
    if payload > expected {
        return Err(Error::Format(format!(
            "trailing data: {rows}x{cols} needs {expected} bytes, got {payload}"
        )));
    }
    let values: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    let data =
        Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::Format(e.to_string()))?;
    FeatureMatrix::new(data, flags & FLAG_POST_RELU != 0)
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_feature_matrix(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_feature_file(path: impl AsRef<Path>, x: &FeatureMatrix) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_feature_matrix(x)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
