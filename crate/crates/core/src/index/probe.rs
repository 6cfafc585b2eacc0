use super::Pipeline;
use crate::embedding::{compute_fv, triplet_from_posteriors, DescriptorSet};
use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::hashing::HashDomain;
use crate::models::{validate_pipeline, Models};

/// Maps descriptor sets to filter bit positions. Indexing and querying share
/// this path so a query is embedded exactly like an indexed frame.
pub(crate) struct Prober<'a> {
    models: &'a Models,
    pipeline: Pipeline,
    filter: FilterConfig,
}

impl<'a> Prober<'a> {
    pub(crate) fn new(models: &'a Models, pipeline: Pipeline, filter: FilterConfig) -> Result<Self> {
        filter.validate()?;
        let hash = models.bank().config();
        validate_pipeline(pipeline, hash, models.gmm().components())?;
        if filter.functions() != hash.functions {
            return Err(Error::InvalidConfig(format!(
                "filter expects M={} hash functions but the bank has {}",
                filter.functions(),
                hash.functions
            )));
        }
        if hash.buckets() > filter.bucket_limit() {
            return Err(Error::InvalidConfig(format!(
                "{}-bit hashes produce {} buckets but the filter addresses only {}",
                hash.bits,
                hash.buckets(),
                filter.bucket_limit()
            )));
        }
        Ok(Prober {
            models,
            pipeline,
            filter,
        })
    }

    /// Appends the bit positions probed by `set`.
    ///
    /// BF-GD treats `set` as one frame and yields `M` probes; BF-PI yields
    /// one probe per descriptor. An empty set yields nothing.
    pub(crate) fn probes(&self, set: &DescriptorSet, out: &mut Vec<u64>) -> Result<()> {
        let pca = self.models.pca();
        if set.dim() != pca.d_in() {
            return Err(Error::DimensionMismatch {
                expected: pca.d_in(),
                actual: set.dim(),
            });
        }
        if set.is_empty() {
            return Ok(());
        }
        if set.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("descriptors"));
        }
        let gmm = self.models.gmm();
        let bank = self.models.bank();
        match self.pipeline {
            Pipeline::BfGd => {
                let fv = compute_fv(gmm, &pca.apply(set)?, true)?;
                let domain = bank.config().domain;
                for (m, f) in bank.functions().iter().enumerate() {
                    let input = match domain {
                        HashDomain::Vbh => fv.values(),
                        HashDomain::Gbh => fv.block(m),
                    };
                    out.push(self.filter.bit_position(m, f.hash_unchecked(input))?);
                }
            }
            Pipeline::BfPi => {
                let mut y = Vec::with_capacity(pca.d_out());
                let mut gamma = Vec::with_capacity(gmm.components());
                for x in set.rows() {
                    pca.project_into(x, &mut y);
                    gmm.posteriors_into(&y, &mut gamma);
                    let t = triplet_from_posteriors(gmm, &y, &gamma);
                    let bucket = bank.functions()[t.gaussian].hash_unchecked(&t.residual);
                    out.push(self.filter.bit_position(t.gaussian, bucket)?);
                }
            }
        }
        Ok(())
    }
}
