//! `QIVF` FV★ database files.
//!
//! ```text
//! magic        "QIVF"
//! version      u32
//! granularity  u8      0 = scene, 1 = shot, 2 = frame
//! K            u32
//! d            u32
//! count        u32
//! ids          per entry: owner id (u16 length + bytes); shot and frame
//!              entries follow it with their scene id
//! codes        per entry: ceil(K * d / 64) little-endian u64 words
//! ```

use std::path::Path;

use super::{BinarizedFv, BinaryCode, FvStarDatabase, Granularity};
use crate::error::Result;
use crate::io::{read_file, write_file, ByteReader, ByteWriter};

pub const FV_STAR_MAGIC: &[u8; 4] = b"QIVF";

impl FvStarDatabase {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_header(FV_STAR_MAGIC);
        w.u8(self.granularity.code());
        w.u32(self.components as u32);
        w.u32(self.dim as u32);
        w.u32(self.entries.len() as u32);
        for e in &self.entries {
            w.short_str(&e.owner_id)?;
            if self.granularity != Granularity::Scene {
                w.short_str(&e.scene_id)?;
            }
        }
        for e in &self.entries {
            e.code.words().iter().for_each(|&word| w.u64(word));
        }
        Ok(w.into_inner())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open("FV* database", bytes, FV_STAR_MAGIC)?;
        let code = r.u8()?;
        let granularity = Granularity::from_code(code).ok_or_else(|| r.err(format!("unknown granularity {code}")))?;
        let components = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let count = r.u32()? as usize;
        let bits = components
            .checked_mul(dim)
            .filter(|&b| b > 0)
            .ok_or_else(|| r.err("invalid code length"))?;
        let mut ids = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let owner = r.short_str()?;
            let scene = if granularity == Granularity::Scene {
                owner.clone()
            } else {
                r.short_str()?
            };
            ids.push((owner, scene));
        }
        let mut entries = Vec::with_capacity(ids.len());
        for (owner_id, scene_id) in ids {
            let words = (0..bits.div_ceil(64)).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
            let code = BinaryCode::from_words(words, bits).map_err(|e| r.err(e.to_string()))?;
            entries.push(BinarizedFv {
                code,
                owner_id,
                scene_id,
            });
        }
        r.finish()?;
        FvStarDatabase::new(granularity, components, dim, entries)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}
