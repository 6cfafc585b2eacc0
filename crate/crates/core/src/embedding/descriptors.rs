//! Local descriptor matrices and the `QIVD` descriptor file.
//!
//! ```text
//! magic  "QIVD"
//! version u32
//! count   u64      number of rows
//! dim     u32
//! rows    f32[count * dim], row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::{read_file, write_file, ByteReader, ByteWriter};

pub const DESCRIPTOR_MAGIC: &[u8; 4] = b"QIVD";

/// N descriptors of dimension `dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorSet {
    source_id: String,
    dim: usize,
    data: Vec<f64>,
}

impl DescriptorSet {
    pub fn new(source_id: impl Into<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("descriptor dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::LengthMismatch {
                expected: (data.len() / dim + 1) * dim,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("descriptor set"));
        }
        Ok(DescriptorSet {
            source_id: source_id.into(),
            dim,
            data,
        })
    }

    pub fn from_rows(source_id: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidConfig("cannot infer dimension from zero rows".into()))?;
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(source_id, dim, data)
    }

    pub fn empty(source_id: impl Into<String>, dim: usize) -> Self {
        DescriptorSet {
            source_id: source_id.into(),
            dim,
            data: Vec::new(),
        }
    }

    /// Concatenates the rows of several sets sharing one dimension.
    pub fn concat<'a>(source_id: impl Into<String>, sets: impl IntoIterator<Item = &'a DescriptorSet>) -> Result<Self> {
        let mut dim = None;
        let mut data = Vec::new();
        for set in sets {
            match dim {
                None => dim = Some(set.dim),
                Some(d) if d != set.dim => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        actual: set.dim,
                    })
                }
                _ => {}
            }
            data.extend_from_slice(&set.data);
        }
        let dim = dim.ok_or_else(|| Error::InvalidConfig("no descriptor sets to concatenate".into()))?;
        Ok(DescriptorSet {
            source_id: source_id.into(),
            dim,
            data,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn with_source_id(mut self, source_id: impl Into<String>) -> Self {
        self.source_id = source_id.into();
        self
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let dim =
            u32::try_from(self.dim).map_err(|_| Error::InvalidConfig("descriptor dimension exceeds u32".into()))?;
        let mut w = ByteWriter::with_header(DESCRIPTOR_MAGIC);
        w.u64(self.len() as u64);
        w.u32(dim);
        for &v in &self.data {
            w.f32(v as f32);
        }
        Ok(w.into_inner())
    }

    pub fn from_bytes(source_id: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open("descriptor", bytes, DESCRIPTOR_MAGIC)?;
        let count = usize::try_from(r.u64()?).map_err(|_| r.err("row count overflow"))?;
        let dim = r.u32()? as usize;
        if dim == 0 {
            return Err(r.err("zero dimension"));
        }
        let total = count.checked_mul(dim).ok_or_else(|| r.err("size overflow"))?;
        let data = r.f32_vec(total)?;
        r.finish()?;
        Ok(DescriptorSet {
            source_id: source_id.into(),
            dim,
            data,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        Self::from_bytes(path.display().to_string(), &bytes)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_ragged_and_non_finite() {
        assert!(DescriptorSet::new("a", 3, vec![1.0; 4]).is_err());
        assert!(DescriptorSet::new("a", 2, vec![1.0, f64::NAN]).is_err());
        assert!(DescriptorSet::from_rows("a", &[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(DescriptorSet::new("a", 0, vec![]).is_err());
    }

    #[test]
    fn empty_set_is_valid() {
        let s = DescriptorSet::new("a", 4, vec![]).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn file_roundtrip_is_stable() {
        let s = DescriptorSet::new("a", 2, vec![0.1, -2.5, 3.0, 1e-3]).unwrap();
        let bytes = s.to_bytes().unwrap();
        let back = DescriptorSet::from_bytes("a", &bytes).unwrap();
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.len(), 2);
        assert_eq!(back.row(0)[1], -2.5);
    }
}
