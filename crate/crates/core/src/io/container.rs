//! Binary container for trained models and descriptor sets (`.samc`).
//!
//! ```text
//! magic "SAMC" | version u32 LE (1) | kind u32 LE | meta_len u64 LE | meta (UTF-8 JSON)
//! n_arrays u32 LE | per array: name_len u32 LE, name, rows u32 LE, cols u32 LE,
//!                              rows*cols binary64 LE, row-major
//! ```
//!
//! Arrays are stored in double precision so models reload bit-exactly.

use std::path::Path;

use ndarray::Array2;
use serde_json::Value;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SAMC";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContainerKind {
    Descriptors = 1,
    Vlad = 2,
    Svm = 3,
}

impl ContainerKind {
    fn from_u32(v: u32) -> Result<Self> {
        match v {
            1 => Ok(ContainerKind::Descriptors),
            2 => Ok(ContainerKind::Vlad),
            3 => Ok(ContainerKind::Svm),
            other => Err(Error::Format(format!("unknown container kind {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Container {
    pub kind: ContainerKind,
    pub meta: Value,
    pub arrays: Vec<(String, Array2<f64>)>,
}

impl Container {
    pub fn new(kind: ContainerKind, meta: Value) -> Self {
        Self {
            kind,
            meta,
            arrays: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, array: Array2<f64>) {
        self.arrays.push((name.into(), array));
    }

    pub fn array(&self, name: &str) -> Result<&Array2<f64>> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a)
            .ok_or_else(|| Error::Format(format!("container has no array `{name}`")))
    }

    pub fn expect_kind(&self, kind: ContainerKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!(
                "expected a {kind:?} container, found {:?}",
                self.kind
            )));
        }
        Ok(())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let meta = serde_json::to_vec(&self.meta).map_err(|e| Error::Format(e.to_string()))?;
        let u32_of =
            |v: usize| u32::try_from(v).map_err(|_| Error::Format(format!("{v} exceeds u32")));
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.kind as u32).to_le_bytes());
        out.extend_from_slice(&(meta.len() as u64).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&u32_of(self.arrays.len())?.to_le_bytes());
        for (name, a) in &self.arrays {
            out.extend_from_slice(&u32_of(name.len())?.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&u32_of(a.nrows())?.to_le_bytes());
            out.extend_from_slice(&u32_of(a.ncols())?.to_le_bytes());
            for v in a.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic, expected \"SAMC\"".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported container version {version}"
            )));
        }
        let kind = ContainerKind::from_u32(r.u32()?)?;
        let meta_len =
            usize::try_from(r.u64()?).map_err(|_| Error::Format("meta too large".into()))?;
        let meta = serde_json::from_slice(r.take(meta_len)?)
            .map_err(|e| Error::Format(format!("meta: {e}")))?;
        let n = r.u32()? as usize;
        let mut arrays = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let name_len = r.u32()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::Format("array name is not UTF-8".into()))?;
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let len = rows
                .checked_mul(cols)
                .and_then(|v| v.checked_mul(8))
                .ok_or_else(|| Error::Format("array too large".into()))?;
            let values = r
                .take(len)?
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            let a = Array2::from_shape_vec((rows, cols), values)
                .map_err(|e| Error::Format(e.to_string()))?;
            arrays.push((name, a));
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after container".into()));
        }
        Ok(Self { kind, meta, arrays })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated container at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}
