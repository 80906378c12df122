//! `FEMB` embedding interchange files.
//!
//! Little-endian layout:
//!
//! | field       | encoding                                   |
//! |-------------|--------------------------------------------|
//! | magic       | `b"FEMB"`                                  |
//! | version     | u32, currently 1                           |
//! | n           | u64, number of faces (rows)                |
//! | d           | u64, feature dimension (columns)           |
//! | layer name  | u32 byte length + UTF-8 bytes              |
//! | face ids    | n records of u32 byte length + UTF-8 bytes |
//! | payload     | n*d f32 values, row-major                  |

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::FaceId;
use crate::error::{Error, Result};

pub const FEMB_MAGIC: &[u8; 4] = b"FEMB";
pub const FEMB_VERSION: u32 = 1;

/// n x d feature matrix exported from one named source (network layer or
/// geometric feature set). Values are stored as f32, matching the file format.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    layer_name: String,
    face_ids: Vec<FaceId>,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(
        layer_name: impl Into<String>,
        face_ids: Vec<FaceId>,
        dim: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let n = face_ids.len();
        if n == 0 || dim == 0 {
            return Err(Error::Shape(format!("embedding matrix must be non-empty (n={n}, d={dim})")));
        }
        if data.len() != n * dim {
            return Err(Error::Shape(format!(
                "payload has {} values, expected {n} x {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("embedding contains non-finite values".into()));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &face_ids {
            if !seen.insert(id) {
                return Err(Error::Duplicate(format!("face `{id}` appears twice in embedding")));
            }
        }
        Ok(Self {
            layer_name: layer_name.into(),
            face_ids,
            dim,
            data,
        })
    }

    /// Builds from f64 rows, rounding to f32.
    pub fn from_rows(
        layer_name: impl Into<String>,
        face_ids: Vec<FaceId>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("rows have differing lengths".into()));
        }
        let data = rows.iter().flatten().map(|&v| v as f32).collect();
        Self::new(layer_name, face_ids, dim, data)
    }

    pub fn layer_name(&self) -> &str {
        &self.layer_name
    }

    pub fn face_ids(&self) -> &[FaceId] {
        &self.face_ids
    }

    pub fn n(&self) -> usize {
        self.face_ids.len()
    }

    pub fn d(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn index_of(&self, face: &FaceId) -> Option<usize> {
        self.face_ids.iter().position(|f| f == face)
    }

    /// Gathers the given rows (by index) into a dense f64 matrix.
    pub fn gather(&self, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.dim, |i, j| self.data[rows[i] * self.dim + j] as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.data.len() * 4);
        out.extend_from_slice(FEMB_MAGIC);
        out.extend_from_slice(&FEMB_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        put_str(&mut out, &self.layer_name);
        for id in &self.face_ids {
            put_str(&mut out, id.as_str());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != FEMB_MAGIC {
            return Err(Error::Format("bad magic: expected `FEMB`".into()));
        }
        let version = r.u32()?;
        if version != FEMB_VERSION {
            return Err(Error::Version {
                found: version,
                supported: FEMB_VERSION,
            });
        }
        let n = r.u64()?;
        let d = r.u64()?;
        let count = n
            .checked_mul(d)
            .and_then(|c| c.checked_mul(4))
            .and_then(|b| usize::try_from(b).ok())
            .ok_or_else(|| Error::Format(format!("n*d overflows ({n} x {d})")))?;
        let layer_name = r.string()?;
        // Each face record needs at least 4 bytes; reject absurd n before allocating.
        if (n as u128) * 4 > r.remaining() as u128 {
            return Err(Error::Format("truncated face-id table".into()));
        }
        let mut face_ids = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let s = r.string()?;
            face_ids.push(FaceId::new(s).map_err(|e| Error::Format(e.to_string()))?);
        }
        let payload = r.take(count)?;
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes after payload", r.remaining())));
        }
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Self::new(layer_name, face_ids, d as usize, data).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub(crate) fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

/// Bounds-checked little-endian cursor shared by the binary formats.
pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    pub(crate) fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        if len > self.remaining() {
            return Err(Error::Format(format!(
                "truncated: needed {len} bytes at offset {}, {} available",
                self.pos,
                self.remaining()
            )));
        }
        let s = &self.bytes[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::Format("string is not valid UTF-8".into()))
    }
}
