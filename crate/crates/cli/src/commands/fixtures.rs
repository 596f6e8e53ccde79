use std::path::Path;

use serde::Serialize;

use semtrans_core::dataset::{generate_fixture_corpus, ClusterRegistry, FixtureSpec, ImageIndex};

use crate::error::Result;
use crate::manifest::{sha256_hex, RunDir};

#[derive(Serialize)]
struct FixtureRecipe<'a> {
    spec: &'a FixtureSpec,
    registry: &'a [semtrans_core::dataset::ClusterEntry],
}

/// Generate a synthetic corpus for `registry` under `dir` and list every file
/// in the directory's manifest.
pub fn generate_fixtures(dir: &Path, registry: &ClusterRegistry, spec: FixtureSpec) -> Result<ImageIndex> {
    let recipe = FixtureRecipe {
        spec: &spec,
        registry: registry.entries(),
    };
    let hash = sha256_hex(&serde_json::to_vec(&recipe).expect("recipe serializes"));
    let mut run = RunDir::open(dir, &hash, "fixtures")?;
    let index = generate_fixture_corpus(dir, registry, spec)?;
    for ids in index.validation.values().chain(index.training.values()) {
        for id in ids {
            run.record(id)?;
        }
    }
    run.record("index.json")?;
    run.finish()?;
    Ok(index)
}
