//! `QIVI` index files.
//!
//! ```text
//! magic         "QIVI"
//! version       u32
//! pipeline      u8      0 = BF-GD, 1 = BF-PI
//! filter block  partitioned u8, M u32, length u64
//! hash block    family u8, domain u8, M u32, n u8, input_dim u32, seed u64
//! fingerprints  SHA-256 of the GMM, PCA and hash-bank files, 32 bytes each
//! scenes        count u32, then id_len u16 + id bytes per scene
//! postings      count u32, then per list: m u16, bucket u32, count u32,
//!               count LEB128 ordinal gaps (the first gap is the ordinal)
//! idf           f32 per posting list, in posting order
//! ```
//!
//! Non-partitioned filters store every list under `m = 0`.

use std::collections::BTreeMap;
use std::path::Path;

use super::{IdfWeights, InvertedIndex, Pipeline};
use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::hashing::bank_file::{read_config, write_config};
use crate::hashing::BucketId;
use crate::io::{read_file, write_file, ByteReader, ByteWriter};
use crate::models::{Fingerprint, ModelFingerprints};

pub const INDEX_MAGIC: &[u8; 4] = b"QIVI";

fn fingerprint(r: &mut ByteReader<'_>) -> Result<Fingerprint> {
    let mut f = [0u8; 32];
    f.copy_from_slice(r.bytes(32)?);
    Ok(Fingerprint(f))
}

impl InvertedIndex {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = ByteWriter::with_header(INDEX_MAGIC);
        w.u8(self.pipeline.code());
        self.filter.write(&mut w);
        write_config(&mut w, &self.hash)?;
        for f in [&self.fingerprints.gmm, &self.fingerprints.pca, &self.fingerprints.bank] {
            w.bytes(&f.0);
        }
        w.u32(self.scenes.len() as u32);
        for id in &self.scenes {
            w.short_str(id)?;
        }
        w.u32(self.postings.len() as u32);
        for (&bit, list) in &self.postings {
            let (m, bucket) = self.filter.split_bit(bit);
            w.u16(m as u16);
            w.u32(bucket as u32);
            w.u32(list.len() as u32);
            let mut prev = 0u32;
            for (i, &v) in list.iter().enumerate() {
                w.varint(u64::from(if i == 0 { v } else { v - prev }));
                prev = v;
            }
        }
        for &bit in self.postings.keys() {
            w.f32(self.idf.weight(bit) as f32);
        }
        Ok(w.into_inner())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::open("index", bytes, INDEX_MAGIC)?;
        let tag = r.u8()?;
        let pipeline = Pipeline::from_code(tag).ok_or_else(|| r.err(format!("unknown pipeline tag {tag}")))?;
        let filter = FilterConfig::read(&mut r)?;
        let hash = read_config(&mut r)?;
        let fingerprints = ModelFingerprints {
            gmm: fingerprint(&mut r)?,
            pca: fingerprint(&mut r)?,
            bank: fingerprint(&mut r)?,
        };
        let scene_count = r.u32()? as usize;
        let scenes = (0..scene_count).map(|_| r.short_str()).collect::<Result<Vec<_>>>()?;

        let list_count = r.u32()? as usize;
        let mut postings = BTreeMap::new();
        let mut order = Vec::with_capacity(list_count);
        for _ in 0..list_count {
            let m = r.u16()? as usize;
            let bucket = r.u32()?;
            let bit = filter
                .bit_position(m, BucketId(bucket))
                .map_err(|e| r.err(e.to_string()))?;
            let count = r.u32()? as usize;
            if count == 0 || count > scene_count {
                return Err(r.err(format!("posting list length {count} out of range")));
            }
            let mut list = Vec::with_capacity(count);
            let mut prev = 0u64;
            for i in 0..count {
                let gap = r.varint()?;
                if i > 0 && gap == 0 {
                    return Err(r.err("posting list is not strictly ascending"));
                }
                prev = if i == 0 { gap } else { prev + gap };
                if prev >= scene_count as u64 {
                    return Err(r.err(format!("scene ordinal {prev} out of range")));
                }
                list.push(prev as u32);
            }
            if order.last().is_some_and(|&last| last >= bit) {
                return Err(r.err("posting lists are not in ascending bucket order"));
            }
            order.push(bit);
            postings.insert(bit, list);
        }
        let mut weights = BTreeMap::new();
        for &bit in &order {
            let w = f64::from(r.f32()?);
            if !w.is_finite() || w < 0.0 {
                return Err(r.err("invalid idf weight"));
            }
            weights.insert(bit, w);
        }
        r.finish()?;

        let mut unique = scenes.clone();
        unique.sort_unstable();
        if unique.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::format("index", "duplicate scene id"));
        }
        let mut index = InvertedIndex::seal(pipeline, filter, hash, fingerprints, scenes, postings)
            .map_err(|e| Error::format("index", e.to_string()))?;
        index.idf = IdfWeights::new(&index, weights)?;
        Ok(index)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes()?)
    }
}
