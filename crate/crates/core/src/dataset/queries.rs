use std::collections::HashMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::index::ImageIndex;
use super::registry::ClusterRegistry;
use crate::error::{Error, Result};
use crate::query::TransformQuery;
use crate::rng;

/// Source labels drawn for every target label.
pub const SOURCES_PER_TARGET: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Dev,
    Test,
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split `{other}`"))),
        }
    }
}

/// One line of a query file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    #[serde(flatten)]
    pub query: TransformQuery,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySet {
    pub records: Vec<QueryRecord>,
    pub seed: u64,
}

impl QuerySet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn queries(&self) -> impl Iterator<Item = &TransformQuery> {
        self.records.iter().map(|r| &r.query)
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &TransformQuery> {
        self.records
            .iter()
            .filter(move |r| r.split == Some(split))
            .map(|r| &r.query)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("query record serializes"));
            out.push('\n');
        }
        out
    }

    /// Parse a query file. The seed is not stored in the file and is set to 0.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let records = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Schema(format!("query line {}: {e}", i + 1))))
            .collect::<Result<_>>()?;
        Ok(QuerySet { records, seed: 0 })
    }

    /// Every query has distinct texts and same-cluster labels.
    pub fn validate(&self, reg: &ClusterRegistry) -> Result<()> {
        for q in self.queries() {
            q.validate()?;
            if !reg.same_cluster(&q.source_label, &q.target_label) {
                return Err(Error::Schema(format!(
                    "query `{}`: `{}` and `{}` are not in the same cluster",
                    q.id, q.source_label, q.target_label
                )));
            }
        }
        Ok(())
    }
}

/// For every target label, draw [`SOURCES_PER_TARGET`] source labels from the
/// other labels of its cluster and one validation image per source.
///
/// Sources are drawn without replacement when the cluster has enough other
/// labels and with replacement otherwise. Images of a repeated source are
/// distinct until that label's pool is exhausted. Output order follows the
/// registry's label order.
pub fn build_queries(reg: &ClusterRegistry, idx: &ImageIndex, seed: u64) -> Result<QuerySet> {
    idx.ensure_validation_coverage(reg.labels())?;
    let mut records = Vec::with_capacity(reg.counts().labels * SOURCES_PER_TARGET);
    for (t_idx, target) in reg.labels().enumerate() {
        let cluster = reg.cluster_of(target).expect("registry label");
        let others: Vec<&str> = cluster
            .labels
            .iter()
            .map(String::as_str)
            .filter(|l| *l != target)
            .collect();
        let mut rng = rng::keyed_rng(&[seed, 0x51, t_idx as u64]);
        let sources: Vec<&str> = if others.len() < SOURCES_PER_TARGET {
            (0..SOURCES_PER_TARGET)
                .map(|_| others[rng.random_range(0..others.len())])
                .collect()
        } else {
            index::sample(&mut rng, others.len(), SOURCES_PER_TARGET)
                .into_iter()
                .map(|i| others[i])
                .collect()
        };
        let mut pools: HashMap<&str, Vec<&String>> = HashMap::new();
        for source in sources {
            let pool = pools.entry(source).or_default();
            if pool.is_empty() {
                pool.extend(idx.validation_images(source));
                pool.shuffle(&mut rng);
            }
            let image_id = pool.pop().expect("label has validation images");
            records.push(QueryRecord {
                query: TransformQuery {
                    id: format!("q{:04}", records.len()),
                    image_id: image_id.clone(),
                    source_text: source.to_string(),
                    target_text: target.to_string(),
                    cluster_id: cluster.cluster.clone(),
                    source_label: source.to_string(),
                    target_label: target.to_string(),
                },
                split: None,
            });
        }
    }
    Ok(QuerySet { records, seed })
}

/// Shuffle the queries and tag the first half `dev`, the rest `test`. Query
/// order is unchanged.
pub fn split_dev_test(qs: &QuerySet, seed: u64) -> Result<QuerySet> {
    let n = qs.len();
    if n % 2 != 0 {
        return Err(Error::invalid(format!("cannot split {n} queries into equal halves")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::keyed_rng(&[seed, 0x5917]));
    let mut out = qs.clone();
    for (rank, &i) in order.iter().enumerate() {
        out.records[i].split = Some(if rank < n / 2 { Split::Dev } else { Split::Test });
    }
    Ok(out)
}
