//! Evaluation metrics: Simplified FID, its class-conditional variant,
//! accuracy restricted to a label subset, and the scaled perceptual distance.

mod accuracy;
mod dump;
mod extract;
mod perceptual;
mod report;
mod stats;

pub use accuracy::{restricted_accuracy, restricted_argmax, Classifier, LinearProbeClassifier, OracleClassifier};
pub use dump::{read_feature_dump, write_feature_dump, FeatureDumpHeader};
pub use extract::{FeatureExtractor, ProjectionExtractor};
pub use perceptual::{eval_perceptual, LPIPS_SCALE};
pub use report::{build_report, rollup_by_group, GroupRow, MetricReport, QueryOutcome};
pub use stats::{csfid, feature_stats, sfid, FeatureSet, FeatureStats, DEFAULT_ALPHA};
