//! Scene-level query-by-image video retrieval.
//!
//! Frames are described by local descriptors, embedded with PCA and a
//! diagonal GMM (Fisher vectors), hashed with locality-sensitive or
//! vector-quantizing hash families, and summarized per scene by a Bloom
//! filter. Scenes are retrieved through an inverted index over filter bits.

pub mod baseline;
pub mod config;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod filter;
pub mod hashing;
pub mod index;
mod io;
mod kmeans;
pub mod manifest;
pub mod models;
pub mod rng;

pub use error::{Error, Result};
pub use io::FORMAT_VERSION;
