use rand::Rng;
use rand_distr::StandardNormal;

use super::{BucketId, HashBank, HashConfig, HashFamily, HashFunction};
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// `n` random hyperplanes through the origin. Bit `i` of the bucket is set
/// when the input lies on the non-negative side of plane `i`.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperplaneHash {
    /// `n x dim` plane normals, row-major.
    Dense { planes: Vec<f64>, dim: usize },
    /// Axis-aligned planes: bit `i` is the sign of coordinate `indices[i]`.
    Axis { indices: Vec<u32>, dim: usize },
}

impl HyperplaneHash {
    pub fn dense(planes: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || planes.is_empty() || !planes.len().is_multiple_of(dim) {
            return Err(Error::InvalidConfig("plane matrix must be n x dim".into()));
        }
        if planes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hyperplanes"));
        }
        Ok(HyperplaneHash::Dense { planes, dim })
    }

    pub fn axis(indices: Vec<u32>, dim: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidConfig("axis hash needs at least one index".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i as usize >= dim) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                limit: dim,
            });
        }
        Ok(HyperplaneHash::Axis { indices, dim })
    }

    pub fn bits(&self) -> usize {
        match self {
            HyperplaneHash::Dense { planes, dim } => planes.len() / dim,
            HyperplaneHash::Axis { indices, .. } => indices.len(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            HyperplaneHash::Dense { dim, .. } | HyperplaneHash::Axis { dim, .. } => *dim,
        }
    }

    pub fn is_axis_aligned(&self) -> bool {
        matches!(self, HyperplaneHash::Axis { .. })
    }

    pub(crate) fn hash_unchecked(&self, v: &[f64]) -> BucketId {
        let mut bucket = 0u32;
        match self {
            HyperplaneHash::Dense { planes, dim } => {
                for (i, plane) in planes.chunks_exact(*dim).enumerate() {
                    let dot: f64 = plane.iter().zip(v).map(|(p, x)| p * x).sum();
                    if dot >= 0.0 {
                        bucket |= 1 << i;
                    }
                }
            }
            HyperplaneHash::Axis { indices, .. } => {
                for (i, &idx) in indices.iter().enumerate() {
                    if v[idx as usize] >= 0.0 {
                        bucket |= 1 << i;
                    }
                }
            }
        }
        BucketId(bucket)
    }
}

fn sample_function(config: &HashConfig, m: usize) -> HyperplaneHash {
    let n = config.bits as usize;
    let dim = config.input_dim;
    let stream = (u64::from(config.family.code()) << 32) | m as u64;
    match config.family {
        HashFamily::LshB => {
            let indices = (0..n)
                .map(|row| {
                    let mut rng = stream_rng(config.seed, stream, row as u64);
                    rng.random_range(0..dim as u32)
                })
                .collect();
            HyperplaneHash::Axis { indices, dim }
        }
        HashFamily::LshC | HashFamily::LshS => {
            let mut planes = Vec::with_capacity(n * dim);
            for row in 0..n {
                let mut rng = stream_rng(config.seed, stream, row as u64);
                for _ in 0..dim {
                    let v = if config.family == HashFamily::LshC {
                        // Kept at f32 precision so banks survive serialization exactly.
                        f64::from(rng.sample::<f64, _>(StandardNormal) as f32)
                    } else if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    };
                    planes.push(v);
                }
            }
            HyperplaneHash::Dense { planes, dim }
        }
        HashFamily::Vq => unreachable!("checked by caller"),
    }
}

/// Draws `M` independent hyperplane hashes. Row `i` of function `m` depends
/// only on `(seed, family, m, i)`.
pub fn sample_hash_bank(config: &HashConfig) -> Result<HashBank> {
    config.validate()?;
    if config.family == HashFamily::Vq {
        return Err(Error::UnsupportedFamily(
            "vector quantizers are trained, not sampled; use train_vq_bank".into(),
        ));
    }
    let functions = (0..config.functions)
        .map(|m| HashFunction::Hyperplane(sample_function(config, m)))
        .collect();
    HashBank::new(*config, functions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::HashDomain;

    fn config(family: HashFamily, bits: u8, input_dim: usize, seed: u64) -> HashConfig {
        HashConfig {
            family,
            domain: HashDomain::Gbh,
            functions: 3,
            bits,
            input_dim,
            seed,
        }
    }

    #[test]
    fn banks_are_deterministic() {
        let c = config(HashFamily::LshS, 2, 3, 7);
        assert_eq!(sample_hash_bank(&c).unwrap(), sample_hash_bank(&c).unwrap());
        let other = config(HashFamily::LshS, 2, 3, 8);
        assert_ne!(sample_hash_bank(&c).unwrap(), sample_hash_bank(&other).unwrap());
    }

    #[test]
    fn sign_planes_are_plus_minus_one() {
        let bank = sample_hash_bank(&config(HashFamily::LshS, 8, 16, 1)).unwrap();
        for f in bank.functions() {
            let HashFunction::Hyperplane(HyperplaneHash::Dense { planes, .. }) = f else {
                panic!("expected dense planes");
            };
            assert!(planes.iter().all(|&v| v == 1.0 || v == -1.0));
        }
    }

    #[test]
    fn axis_indices_in_range() {
        let bank = sample_hash_bank(&config(HashFamily::LshB, 8, 32, 4)).unwrap();
        for f in bank.functions() {
            let HashFunction::Hyperplane(HyperplaneHash::Axis { indices, .. }) = f else {
                panic!("expected axis planes");
            };
            assert_eq!(indices.len(), 8);
            assert!(indices.iter().all(|&i| i < 32));
        }
    }

    #[test]
    fn vq_cannot_be_sampled() {
        assert!(matches!(
            sample_hash_bank(&config(HashFamily::Vq, 2, 2, 0)),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn bit_order_is_little_endian() {
        let h = HyperplaneHash::axis(vec![0, 1], 2).unwrap();
        assert_eq!(h.hash_unchecked(&[0.5, -0.3]), BucketId(1));
        assert_eq!(h.hash_unchecked(&[-0.5, 0.3]), BucketId(2));
        assert_eq!(h.hash_unchecked(&[0.0, 0.0]), BucketId(3));
    }

    #[test]
    fn positive_scaling_preserves_bucket() {
        let bank = sample_hash_bank(&config(HashFamily::LshC, 12, 5, 3)).unwrap();
        let v = [0.3, -1.2, 0.8, 0.05, -0.4];
        let scaled: Vec<f64> = v.iter().map(|x| 3.0 * x).collect();
        for m in 0..bank.len() {
            assert_eq!(bank.hash(m, &v).unwrap(), bank.hash(m, &scaled).unwrap());
        }
    }

    #[test]
    fn dimension_checked() {
        let bank = sample_hash_bank(&config(HashFamily::LshC, 4, 5, 3)).unwrap();
        assert!(matches!(bank.hash(0, &[1.0; 4]), Err(Error::DimensionMismatch { .. })));
    }
}
