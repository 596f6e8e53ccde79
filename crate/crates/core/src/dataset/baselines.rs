use rand::Rng;
use sha2::{Digest, Sha256};

use super::index::ImageIndex;
use crate::backends::Autoencoder;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::query::TransformQuery;
use crate::rng;

/// Returns the input unchanged.
pub fn baseline_copy(_query: &TransformQuery, input: &Image) -> Image {
    input.clone()
}

/// Autoencoder round trip of the input.
pub fn baseline_encode(_query: &TransformQuery, input: &Image, ae: &dyn Autoencoder) -> Result<Image> {
    ae.decode(&ae.encode(input)?)
}

fn query_key(query: &TransformQuery) -> u64 {
    let digest = Sha256::digest(query.id.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest length"))
}

/// A validation image of the target label, drawn uniformly under `seed`.
/// The query's own input is excluded whenever another candidate exists.
/// Returns the image id.
pub fn baseline_retrieve(query: &TransformQuery, idx: &ImageIndex, seed: u64) -> Result<String> {
    let pool = idx.validation_images(&query.target_label);
    if pool.is_empty() {
        return Err(Error::MissingData(format!(
            "no validation image for target `{}`",
            query.target_label
        )));
    }
    let candidates: Vec<&String> = if pool.len() >= 2 {
        pool.iter().filter(|id| **id != query.image_id).collect()
    } else {
        pool.iter().collect()
    };
    let candidates = if candidates.is_empty() { pool.iter().collect() } else { candidates };
    let mut rng = rng::keyed_rng(&[seed, 0x8E78, query_key(query)]);
    Ok(candidates[rng.random_range(0..candidates.len())].clone())
}
