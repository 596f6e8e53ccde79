//! Text-driven semantic image translation by per-image latent optimization,
//! and the evaluation protocol used to score it.
//!
//! The crate is organised as
//!
//! - [`image`], [`embedding`], [`latent`], [`params`]: shared value types and
//!   elementary image/vector math,
//! - [`backends`]: encoder interfaces, augmentation, the concatenating ensemble
//!   embedder and deterministic surrogate networks,
//! - [`optimizer`]: target point, loss terms and the normalized-gradient loop,
//! - [`metrics`]: SFID, class-conditional SFID, restricted accuracy and the
//!   evaluation perceptual distance,
//! - [`dataset`]: label clusters, query construction, baselines and group
//!   rollups.

pub mod backends;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod image;
pub mod latent;
pub mod metrics;
pub mod optimizer;
pub mod params;
pub mod query;
pub mod resample;
pub mod rng;

pub use embedding::{l2_normalize, EmbeddingVector, TargetPoint};
pub use error::{Error, Result};
pub use image::{resize, Image};
pub use latent::{LatentCode, LatentShape};
pub use params::{HyperParams, LatentNorm};
pub use query::TransformQuery;
