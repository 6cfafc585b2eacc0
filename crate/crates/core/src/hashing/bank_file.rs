//! `QIVH` hash-bank files.
//!
//! ```text
//! magic     "QIVH"
//! version   u32
//! family    u8     0 = LSH-C, 1 = LSH-S, 2 = LSH-B, 3 = VQ
//! domain    u8     0 = VBH, 1 = GBH
//! M         u32
//! n         u8
//! input_dim u32
//! seed      u64
//! M payloads:
//!   LSH-C / LSH-S  f32[n * input_dim]      plane normals, row-major
//!   LSH-B          u32[n]                  coordinate indices
//!   VQ             f32[2^n * input_dim]    centroids, row-major
//! ```

use std::path::Path;

use super::{HashBank, HashConfig, HashDomain, HashFamily, HashFunction, HyperplaneHash, VqHash};
use crate::error::{Error, Result};
use crate::io::{read_file, write_file, ByteReader, ByteWriter};

pub const HASH_BANK_MAGIC: &[u8; 4] = b"QIVH";

pub(crate) fn write_config(w: &mut ByteWriter, c: &HashConfig) -> Result<()> {
    w.u8(c.family.code());
    w.u8(c.domain.code());
    w.u32(u32::try_from(c.functions).map_err(|_| Error::InvalidConfig("too many hash functions".into()))?);
    w.u8(c.bits);
    w.u32(u32::try_from(c.input_dim).map_err(|_| Error::InvalidConfig("input dimension exceeds u32".into()))?);
    w.u64(c.seed);
    Ok(())
}

pub(crate) fn read_config(r: &mut ByteReader<'_>) -> Result<HashConfig> {
    let family = r.u8()?;
    let family = HashFamily::from_code(family).ok_or_else(|| r.err(format!("unknown family {family}")))?;
    let domain = r.u8()?;
    let domain = HashDomain::from_code(domain).ok_or_else(|| r.err(format!("unknown domain {domain}")))?;
    let config = HashConfig {
        family,
        domain,
        functions: r.u32()? as usize,
        bits: r.u8()?,
        input_dim: r.u32()? as usize,
        seed: r.u64()?,
    };
    config.validate().map_err(|e| r.err(e.to_string()))?;
    Ok(config)
}

impl HashBank {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_header(HASH_BANK_MAGIC);
        write_config(&mut w, &self.config)?;
        for f in &self.functions {
            match f {
                HashFunction::Hyperplane(HyperplaneHash::Dense { planes, .. }) => {
                    planes.iter().for_each(|&v| w.f32(v as f32));
                }
                HashFunction::Hyperplane(HyperplaneHash::Axis { indices, .. }) => {
                    indices.iter().for_each(|&i| w.u32(i));
                }
                HashFunction::Vq(q) => q.centroids().iter().for_each(|&v| w.f32(v as f32)),
            }
        }
        Ok(w.into_inner())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open("hash bank", bytes, HASH_BANK_MAGIC)?;
        let config = read_config(&mut r)?;
        let n = config.bits as usize;
        let dim = config.input_dim;
        let mut functions = Vec::with_capacity(config.functions);
        for _ in 0..config.functions {
            let f = match config.family {
                HashFamily::LshC | HashFamily::LshS => {
                    HashFunction::Hyperplane(HyperplaneHash::dense(r.f32_vec(n * dim)?, dim)?)
                }
                HashFamily::LshB => {
                    let indices = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                    HashFunction::Hyperplane(HyperplaneHash::axis(indices, dim)?)
                }
                HashFamily::Vq => {
                    let count = (1usize << n).checked_mul(dim).ok_or_else(|| r.err("size overflow"))?;
                    HashFunction::Vq(VqHash::new(r.f32_vec(count)?, dim, config.bits)?)
                }
            };
            functions.push(f);
        }
        r.finish()?;
        HashBank::new(config, functions)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}
