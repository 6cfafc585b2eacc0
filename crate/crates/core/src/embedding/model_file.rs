//! `QIVM` model files.
//!
//! ```text
//! magic   "QIVM"
//! version u32
//! kind    u8        0 = PCA, 1 = GMM
//! PCA:    d_in u32, d_out u32, mean f64[d_in], basis f64[d_out * d_in]
//! GMM:    K u32, d u32, weights f64[K], means f64[K * d], variances f64[K * d]
//! ```
//!
//! Arrays are little-endian and row-major. Parameters are stored at full
//! double precision so a reloaded model is bit-identical to the trained one.

use std::path::Path;

use super::{DiagonalGmm, PcaModel};
use crate::error::{Error, Result};
use crate::io::{read_file, write_file, ByteReader, ByteWriter};

pub const MODEL_MAGIC: &[u8; 4] = b"QIVM";

const KIND_PCA: u8 = 0;
const KIND_GMM: u8 = 1;

fn dim_u32(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::InvalidConfig(format!("dimension {v} exceeds u32")))
}

impl PcaModel {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_header(MODEL_MAGIC);
        w.u8(KIND_PCA);
        w.u32(dim_u32(self.d_in())?);
        w.u32(dim_u32(self.d_out())?);
        self.mean().iter().for_each(|&v| w.f64(v));
        self.basis().iter().for_each(|&v| w.f64(v));
        Ok(w.into_inner())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open("model", bytes, MODEL_MAGIC)?;
        let kind = r.u8()?;
        if kind != KIND_PCA {
            return Err(r.err(format!("expected PCA model, found kind {kind}")));
        }
        let d_in = r.u32()? as usize;
        let d_out = r.u32()? as usize;
        let mean = r.f64_vec(d_in)?;
        let basis = r.f64_vec(d_in.checked_mul(d_out).ok_or_else(|| r.err("size overflow"))?)?;
        r.finish()?;
        PcaModel::new(mean, basis, d_out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}

impl DiagonalGmm {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_header(MODEL_MAGIC);
        w.u8(KIND_GMM);
        w.u32(dim_u32(self.components())?);
        w.u32(dim_u32(self.dim())?);
        for v in self.weights().iter().chain(self.means()).chain(self.variances()) {
            w.f64(*v);
        }
        Ok(w.into_inner())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open("model", bytes, MODEL_MAGIC)?;
        let kind = r.u8()?;
        if kind != KIND_GMM {
            return Err(r.err(format!("expected GMM model, found kind {kind}")));
        }
        let k = r.u32()? as usize;
        let d = r.u32()? as usize;
        let kd = k.checked_mul(d).ok_or_else(|| r.err("size overflow"))?;
        let weights = r.f64_vec(k)?;
        let means = r.f64_vec(kd)?;
        let variances = r.f64_vec(kd)?;
        r.finish()?;
        DiagonalGmm::new(weights, means, variances)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}
