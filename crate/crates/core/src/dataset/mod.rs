//! Label clusters, transformation-query construction, baselines and group
//! rollups.

mod baselines;
mod fixtures;
mod index;
mod queries;
mod registry;
mod rollup;

pub use baselines::{baseline_copy, baseline_encode, baseline_retrieve};
pub use fixtures::{generate_fixture_corpus, FixtureSpec};
pub use index::ImageIndex;
pub use queries::{build_queries, split_dev_test, QueryRecord, QuerySet, Split, SOURCES_PER_TARGET};
pub use registry::{load_clusters, ClusterEntry, ClusterRegistry, RegistryCounts, SHIPPED_CLUSTERS_JSON};
pub use rollup::group_rollup;
