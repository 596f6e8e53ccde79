use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The shipped cluster table: 273 labels in 47 clusters and 13 groups.
pub const SHIPPED_CLUSTERS_JSON: &str = include_str!("../../data/clusters.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterEntry {
    pub group: String,
    pub cluster: String,
    pub labels: Vec<String>,
    /// Labels listed for this cluster in the source table but already owned
    /// by an earlier cluster.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_duplicates: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegistryCounts {
    pub labels: usize,
    pub clusters: usize,
    pub groups: usize,
}

impl RegistryCounts {
    pub const BENCHMARK: RegistryCounts = RegistryCounts {
        labels: 273,
        clusters: 47,
        groups: 13,
    };
}

/// Validated cluster table with label → cluster and cluster → group lookups.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRegistry {
    entries: Vec<ClusterEntry>,
    label_cluster: BTreeMap<String, usize>,
    groups: BTreeSet<String>,
}

impl ClusterRegistry {
    /// Structural validation: unique cluster names, at least two labels per
    /// cluster, no label in two clusters, no empty names.
    pub fn from_entries(entries: Vec<ClusterEntry>) -> Result<Self> {
        let mut label_cluster: BTreeMap<String, usize> = BTreeMap::new();
        let mut clusters = BTreeSet::new();
        let mut groups = BTreeSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.group.trim().is_empty() || e.cluster.trim().is_empty() {
                return Err(Error::Schema(format!("entry {i}: empty group or cluster name")));
            }
            if !clusters.insert(e.cluster.clone()) {
                return Err(Error::Schema(format!("cluster `{}` appears twice", e.cluster)));
            }
            if e.labels.len() < 2 {
                return Err(Error::Schema(format!(
                    "cluster `{}` has {} label(s); at least 2 are required",
                    e.cluster,
                    e.labels.len()
                )));
            }
            for label in &e.labels {
                if label.trim().is_empty() {
                    return Err(Error::Schema(format!("cluster `{}` has an empty label", e.cluster)));
                }
                if let Some(&prev) = label_cluster.get(label) {
                    return Err(Error::Schema(format!(
                        "label `{label}` is in both `{}` and `{}`",
                        entries[prev].cluster, e.cluster
                    )));
                }
                label_cluster.insert(label.clone(), i);
            }
            groups.insert(e.group.clone());
        }
        Ok(ClusterRegistry {
            entries,
            label_cluster,
            groups,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<ClusterEntry> =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("cluster registry: {e}")))?;
        Self::from_entries(entries)
    }

    /// The shipped benchmark registry, with its counts checked.
    pub fn shipped() -> Result<Self> {
        let reg = Self::from_json(SHIPPED_CLUSTERS_JSON)?;
        reg.check_counts(RegistryCounts::BENCHMARK)?;
        Ok(reg)
    }

    pub fn counts(&self) -> RegistryCounts {
        RegistryCounts {
            labels: self.label_cluster.len(),
            clusters: self.entries.len(),
            groups: self.groups.len(),
        }
    }

    pub fn check_counts(&self, expected: RegistryCounts) -> Result<()> {
        let got = self.counts();
        if got != expected {
            return Err(Error::Schema(format!(
                "registry has {} labels / {} clusters / {} groups, expected {} / {} / {}",
                got.labels, got.clusters, got.groups, expected.labels, expected.clusters, expected.groups
            )));
        }
        Ok(())
    }

    pub fn entries(&self) -> &[ClusterEntry] {
        &self.entries
    }

    /// Labels in table order.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().flat_map(|e| e.labels.iter().map(String::as_str))
    }

    pub fn cluster_of(&self, label: &str) -> Option<&ClusterEntry> {
        self.label_cluster.get(label).map(|&i| &self.entries[i])
    }

    pub fn group_of(&self, label: &str) -> Option<&str> {
        self.cluster_of(label).map(|e| e.group.as_str())
    }

    pub fn group_of_cluster(&self, cluster: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.cluster == cluster).map(|e| e.group.as_str())
    }

    /// Label → group map for metric rollups.
    pub fn group_map(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .flat_map(|e| e.labels.iter().map(move |l| (l.clone(), e.group.clone())))
            .collect()
    }

    pub fn groups(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().map(String::as_str)
    }

    pub fn same_cluster(&self, a: &str, b: &str) -> bool {
        matches!((self.label_cluster.get(a), self.label_cluster.get(b)), (Some(x), Some(y)) if x == y)
    }
}

/// Load and structurally validate a registry file (JSON array of
/// `{group, cluster, labels}`).
pub fn load_clusters(path: impl AsRef<Path>) -> Result<ClusterRegistry> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ClusterRegistry::from_json(&text)
}
