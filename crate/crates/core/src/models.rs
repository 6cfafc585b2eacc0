//! The trained model bundle (PCA, GMM, hash bank) shared by indexing and
//! querying, its content fingerprints, and the training pipeline.

use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::embedding::{
    compute_fv, fit_gmm, fit_pca, triplet_from_posteriors, DescriptorSet, DiagonalGmm, GmmFit, GmmOptions, PcaModel,
};
use crate::error::{Error, Result};
use crate::hashing::{sample_hash_bank, train_vq_bank, HashBank, HashConfig, HashDomain, HashFamily, VqTrainingReport};
use crate::index::Pipeline;

pub const PCA_FILE: &str = "pca.qivm";
pub const GMM_FILE: &str = "gmm.qivm";
pub const BANK_FILE: &str = "bank.qivh";

/// SHA-256 of a serialized model file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fingerprint(pub [u8; 32]);

impl Fingerprint {
    pub fn of(bytes: &[u8]) -> Self {
        Fingerprint(Sha256::digest(bytes).into())
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelFingerprints {
    pub gmm: Fingerprint,
    pub pca: Fingerprint,
    pub bank: Fingerprint,
}

impl ModelFingerprints {
    /// Names the first model whose fingerprint differs.
    pub fn check(&self, other: &ModelFingerprints) -> Result<()> {
        if self.gmm != other.gmm {
            return Err(Error::FingerprintMismatch("GMM"));
        }
        if self.pca != other.pca {
            return Err(Error::FingerprintMismatch("PCA"));
        }
        if self.bank != other.bank {
            return Err(Error::FingerprintMismatch("hash bank"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Models {
    pca: PcaModel,
    gmm: DiagonalGmm,
    bank: HashBank,
    fingerprints: ModelFingerprints,
}

impl Models {
    pub fn new(pca: PcaModel, gmm: DiagonalGmm, bank: HashBank) -> Result<Self> {
        if pca.d_out() != gmm.dim() {
            return Err(Error::DimensionMismatch {
                expected: gmm.dim(),
                actual: pca.d_out(),
            });
        }
        bank.config().validate_for(gmm.components(), gmm.dim())?;
        let fingerprints = ModelFingerprints {
            gmm: Fingerprint::of(&gmm.to_bytes()?),
            pca: Fingerprint::of(&pca.to_bytes()?),
            bank: Fingerprint::of(&bank.to_bytes()?),
        };
        Ok(Models {
            pca,
            gmm,
            bank,
            fingerprints,
        })
    }

    pub fn pca(&self) -> &PcaModel {
        &self.pca
    }

    pub fn gmm(&self) -> &DiagonalGmm {
        &self.gmm
    }

    pub fn bank(&self) -> &HashBank {
        &self.bank
    }

    pub fn fingerprints(&self) -> &ModelFingerprints {
        &self.fingerprints
    }

    /// Replaces the hash bank, keeping PCA and GMM.
    pub fn with_bank(&self, bank: HashBank) -> Result<Self> {
        Models::new(self.pca.clone(), self.gmm.clone(), bank)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        Models::new(
            PcaModel::read(&dir.join(PCA_FILE))?,
            DiagonalGmm::read(&dir.join(GMM_FILE))?,
            HashBank::read(&dir.join(BANK_FILE))?,
        )
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        self.pca.write(&dir.join(PCA_FILE))?;
        self.gmm.write(&dir.join(GMM_FILE))?;
        self.bank.write(&dir.join(BANK_FILE))
    }
}

/// Checks that a hash configuration can serve a pipeline over a
/// `components`-Gaussian model.
pub fn validate_pipeline(pipeline: Pipeline, hash: &HashConfig, components: usize) -> Result<()> {
    if pipeline == Pipeline::BfPi && hash.domain != HashDomain::Gbh {
        return Err(Error::InvalidConfig(
            "bf_pi hashes per-Gaussian residuals and requires the gbh domain".into(),
        ));
    }
    if hash.domain == HashDomain::Gbh && hash.functions != components {
        return Err(Error::InvalidConfig(format!(
            "gbh hashing needs one function per Gaussian: M={} but K={components}",
            hash.functions
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainingOptions {
    pub pipeline: Pipeline,
    pub pca_dim: usize,
    pub gmm: GmmOptions,
    pub family: HashFamily,
    pub domain: HashDomain,
    pub functions: usize,
    pub bits: u8,
    pub hash_seed: u64,
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub models: Models,
    pub gmm_fit: GmmFit,
    pub vq_report: Option<VqTrainingReport>,
}

/// Hash configuration implied by the options and a fitted GMM.
pub fn hash_config_for(options: &TrainingOptions, components: usize, dim: usize) -> HashConfig {
    HashConfig {
        family: options.family,
        domain: options.domain,
        functions: options.functions,
        bits: options.bits,
        input_dim: match options.domain {
            HashDomain::Vbh => components * dim,
            HashDomain::Gbh => dim,
        },
        seed: options.hash_seed,
    }
}

/// Builds the quantizer training pools for a pipeline from PCA-projected
/// training frames.
///
/// - BF-PI: pool `r` holds residuals of descriptors whose strongest
///   Gaussian is `r`.
/// - BF-GD with GBH: pool `m` holds block `m` of every frame's normalized FV.
/// - BF-GD with VBH: one shared pool of whole normalized FVs.
pub fn quantizer_pools(
    pipeline: Pipeline,
    domain: HashDomain,
    gmm: &DiagonalGmm,
    frames: &[DescriptorSet],
) -> Result<Vec<Vec<f64>>> {
    let (k, d) = (gmm.components(), gmm.dim());
    match (pipeline, domain) {
        (Pipeline::BfPi, _) => {
            let mut pools = vec![Vec::new(); k];
            let mut gamma = Vec::with_capacity(k);
            for x in frames.iter().flat_map(DescriptorSet::rows) {
                gmm.posteriors_into(x, &mut gamma);
                let t = triplet_from_posteriors(gmm, x, &gamma);
                pools[t.gaussian].extend_from_slice(&t.residual);
            }
            Ok(pools)
        }
        (Pipeline::BfGd, HashDomain::Gbh) => {
            let mut pools = vec![Vec::new(); k];
            for frame in frames.iter().filter(|f| !f.is_empty()) {
                let fv = compute_fv(gmm, frame, true)?;
                for (m, pool) in pools.iter_mut().enumerate() {
                    pool.extend_from_slice(&fv.values()[m * d..(m + 1) * d]);
                }
            }
            Ok(pools)
        }
        (Pipeline::BfGd, HashDomain::Vbh) => {
            let mut pool = Vec::new();
            for frame in frames.iter().filter(|f| !f.is_empty()) {
                pool.extend_from_slice(compute_fv(gmm, frame, true)?.values());
            }
            Ok(vec![pool])
        }
    }
}

/// Trains PCA, then the GMM on projected descriptors, then the hash bank
/// (sampled for LSH families, k-means trained for VQ).
pub fn train_models(frames: &[DescriptorSet], options: &TrainingOptions) -> Result<TrainingOutcome> {
    let pca = fit_pca(frames, options.pca_dim)?;
    let projected = frames.iter().map(|f| pca.apply(f)).collect::<Result<Vec<_>>>()?;
    let gmm_fit = fit_gmm(&projected, &options.gmm)?;
    let gmm = gmm_fit.model.clone();
    let config = hash_config_for(options, gmm.components(), gmm.dim());
    validate_pipeline(options.pipeline, &config, gmm.components())?;

    let (bank, vq_report) = if options.family == HashFamily::Vq {
        let pools = quantizer_pools(options.pipeline, options.domain, &gmm, &projected)?;
        let (bank, report) = train_vq_bank(&pools, &config)?;
        (bank, Some(report))
    } else {
        (sample_hash_bank(&config)?, None)
    };
    Ok(TrainingOutcome {
        models: Models::new(pca, gmm, bank)?,
        gmm_fit,
        vq_report,
    })
}
