use super::registry::ClusterRegistry;
use crate::error::Result;
use crate::metrics::{rollup_by_group, FeatureSet, GroupRow, QueryOutcome};

/// Per-group CSFID and failure rate, buckets chosen by the group of each
/// query's target label.
pub fn group_rollup(
    reg: &ClusterRegistry,
    outcomes: &[QueryOutcome],
    real: &FeatureSet,
    alpha: f64,
) -> Result<Vec<GroupRow>> {
    rollup_by_group(outcomes, real, &reg.group_map(), alpha)
}
