use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Label, NOISE};

/// Which algorithm produced a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmTag {
    Kmeans,
    Dbscan,
    Hdbscan,
    HdbscanKnn,
    Birch,
    Consolidated,
    External,
}

/// One label per item. Clusters are numbered `0..n_clusters` in order of
/// first appearance; [`NOISE`] marks unassigned items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<Label>,
    n_clusters: usize,
    algorithm: AlgorithmTag,
}

impl Partition {
    /// Renumbers arbitrary labels canonically. Negative labels become noise.
    pub fn from_labels(raw: &[Label], algorithm: AlgorithmTag) -> Self {
        let mut map = HashMap::new();
        let labels = raw
            .iter()
            .map(|&l| {
                if l < 0 {
                    NOISE
                } else {
                    let next = map.len() as Label;
                    *map.entry(l).or_insert(next)
                }
            })
            .collect();
        Self {
            labels,
            n_clusters: map.len(),
            algorithm,
        }
    }

    /// Parses labels that must already satisfy the partition invariants.
    pub fn try_new(labels: Vec<Label>, n_clusters: usize, algorithm: AlgorithmTag) -> Result<Self> {
        let mut seen = vec![false; n_clusters];
        for &l in &labels {
            if l == NOISE {
                continue;
            }
            if l < 0 || l as usize >= n_clusters {
                return Err(Error::Config(format!(
                    "label {l} outside 0..{n_clusters}"
                )));
            }
            seen[l as usize] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Config(format!("cluster {missing} has no members")));
        }
        Ok(Self {
            labels,
            n_clusters,
            algorithm,
        })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn algorithm(&self) -> AlgorithmTag {
        self.algorithm
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Member indices per cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            if l != NOISE {
                out[l as usize].push(i);
            }
        }
        out
    }

    pub fn with_algorithm(mut self, algorithm: AlgorithmTag) -> Self {
        self.algorithm = algorithm;
        self
    }

    /// True when both partitions group items identically, ignoring cluster
    /// numbering. Noise must coincide exactly.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        self.len() == other.len()
            && Partition::from_labels(&self.labels, self.algorithm).labels
                == Partition::from_labels(&other.labels, self.algorithm).labels
    }
}
