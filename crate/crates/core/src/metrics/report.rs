use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::stats::{csfid, sfid, FeatureSet};
use crate::error::{Error, Result};

/// Evaluation of one transformed image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub target_label: String,
    /// Features of the transformed image.
    pub features: Vec<f64>,
    /// Whether the restricted classifier predicted the target label.
    pub correct: bool,
    /// Scaled evaluation perceptual distance to the input image.
    pub lpips_x100: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub query_count: usize,
    pub csfid: f64,
    /// `1 − accuracy` within the group, as a fraction.
    pub failure_rate: f64,
}

/// Aggregate scores of one method over a query set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub method: String,
    pub lpips_x100: f64,
    pub accuracy_pct: f64,
    pub csfid: f64,
    pub sfid: f64,
    pub alpha: f64,
    pub query_count: usize,
    pub groups: Vec<GroupRow>,
}

fn synth_set(outcomes: &[&QueryOutcome]) -> Result<FeatureSet> {
    let rows: Vec<Vec<f64>> = outcomes.iter().map(|o| o.features.clone()).collect();
    let labels = outcomes.iter().map(|o| o.target_label.clone()).collect();
    FeatureSet::from_rows(&rows, Some(labels))
}

fn sorted(outcomes: &[QueryOutcome]) -> Vec<&QueryOutcome> {
    let mut v: Vec<&QueryOutcome> = outcomes.iter().collect();
    v.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    v
}

/// Class-conditional SFID and failure rate per group of the target label.
/// Groups come out in sorted order.
pub fn rollup_by_group(
    outcomes: &[QueryOutcome],
    real: &FeatureSet,
    group_of: &BTreeMap<String, String>,
    alpha: f64,
) -> Result<Vec<GroupRow>> {
    let mut buckets: BTreeMap<&str, Vec<&QueryOutcome>> = BTreeMap::new();
    for o in sorted(outcomes) {
        let group = group_of
            .get(&o.target_label)
            .ok_or_else(|| Error::Schema(format!("label `{}` has no group", o.target_label)))?;
        buckets.entry(group.as_str()).or_default().push(o);
    }
    buckets
        .into_iter()
        .map(|(group, members)| {
            let correct = members.iter().filter(|o| o.correct).count();
            Ok(GroupRow {
                group: group.to_string(),
                query_count: members.len(),
                csfid: csfid(real, &synth_set(&members)?, alpha)?,
                failure_rate: 1.0 - correct as f64 / members.len() as f64,
            })
        })
        .collect()
}

/// Aggregate per-query outcomes into a report. `real` holds reference
/// features labeled by class; `group_of` maps labels to rollup groups.
pub fn build_report(
    method: &str,
    outcomes: &[QueryOutcome],
    real: &FeatureSet,
    group_of: &BTreeMap<String, String>,
    alpha: f64,
) -> Result<MetricReport> {
    if outcomes.is_empty() {
        return Err(Error::invalid("report over zero queries"));
    }
    let all = sorted(outcomes);
    let synth = synth_set(&all)?;
    let n = all.len() as f64;
    let correct = all.iter().filter(|o| o.correct).count();
    Ok(MetricReport {
        method: method.to_string(),
        lpips_x100: all.iter().map(|o| o.lpips_x100).sum::<f64>() / n,
        accuracy_pct: 100.0 * correct as f64 / n,
        csfid: csfid(real, &synth, alpha)?,
        sfid: sfid(real, &synth, alpha)?,
        alpha,
        query_count: all.len(),
        groups: rollup_by_group(outcomes, real, group_of, alpha)?,
    })
}

impl MetricReport {
    /// Aligned text table with one row per report, columns in the order
    /// LPIPS, Acc.%, CSFID, SFID.
    pub fn table(reports: &[MetricReport]) -> String {
        let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
        let mut out = format!(
            "{:<width$}  {:>8}  {:>8}  {:>10}  {:>10}\n",
            "Method", "LPIPS", "Acc.%", "CSFID", "SFID"
        );
        for r in reports {
            out.push_str(&format!(
                "{:<width$}  {:>8.2}  {:>8.2}  {:>10.4}  {:>10.4}\n",
                r.method, r.lpips_x100, r.accuracy_pct, r.csfid, r.sfid
            ));
        }
        out
    }

    /// Aligned per-group table.
    pub fn group_table(&self) -> String {
        let width = self.groups.iter().map(|g| g.group.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<width$}  {:>7}  {:>10}  {:>8}\n", "Group", "Queries", "CSFID", "Failure");
        for g in &self.groups {
            out.push_str(&format!(
                "{:<width$}  {:>7}  {:>10.4}  {:>8.4}\n",
                g.group, g.query_count, g.csfid, g.failure_rate
            ));
        }
        out
    }
}
