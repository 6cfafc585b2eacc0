//! Descriptor embedding: PCA, diagonal GMMs, Fisher vectors and
//! point-indexed triplets.

mod descriptors;
mod fisher;
mod gmm;
mod model_file;
mod pca;

pub use descriptors::{DescriptorSet, DESCRIPTOR_MAGIC};
pub(crate) use fisher::triplet_from_posteriors;
pub use fisher::{compute_fv, point_index, reconstruct_hard_fv, FisherVector, Normalization, PointIndexedTriplet};
pub use gmm::{fit_gmm, DiagonalGmm, GmmFit, GmmOptions, MONOTONICITY_TOL, VARIANCE_FLOOR};
pub use model_file::MODEL_MAGIC;
pub use pca::{fit_pca, PcaModel};
