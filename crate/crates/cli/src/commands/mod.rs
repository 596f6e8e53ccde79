//! One module per subcommand. Every command writes into the configured run
//! directory and updates its manifest.

pub mod baseline;
pub mod edit;
pub mod evaluate;
pub mod fixtures;
pub mod queries;
pub mod sweep;

use semtrans_core::{Image, TransformQuery};

use crate::error::Result;
use crate::session::Session;

/// Directory, relative to the run directory, holding one method's outputs.
pub fn method_dir(method: &str) -> String {
    format!("outputs/{method}")
}

pub fn output_image_rel(method: &str, query_id: &str) -> String {
    format!("{}/{query_id}.png", method_dir(method))
}

pub(crate) fn load_input(session: &Session, query: &TransformQuery) -> Result<Image> {
    Ok(session.index()?.load_image(&query.image_id)?)
}

/// First error in item order, or all values.
pub(crate) fn collect_ordered<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}
