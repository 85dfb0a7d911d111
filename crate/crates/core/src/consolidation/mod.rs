//! Post-clustering refinement. Every operation here works on an existing
//! [`Partition`] and only ever merges or reassigns whole clusters:
//!
//! * [`constraint_consolidate`] merges clusters to satisfy weighted
//!   must-link / cannot-link hints.
//! * [`prototype_seed`] collapses a partition onto the medoids of its largest
//!   clusters.
//! * [`centroid_agglomerate`] fits spherical Gaussian mixtures to the cluster
//!   centroids and picks the component count by BIC.
//! * [`stability_merge`] and [`adaptive_k`] merge clusters that bootstrap
//!   reruns keep putting together.
//!
//! The "simplified silhouette" used by [`adaptive_k`] measures, for each
//! clustered point, `a` = distance to its own centroid and `b` = distance to
//! the nearest other centroid, and averages `(b - a) / max(a, b)`.

mod agglomerate;
mod constraints;
mod prototype;
mod stability;

use serde::{Deserialize, Serialize};

use crate::cluster::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::{Label, NOISE};

pub use agglomerate::{centroid_agglomerate, Agglomeration, EM_RESTARTS};
pub use constraints::{constraint_consolidate, penalty, ConstraintSet, Link};
pub use prototype::{prototype_seed, SeedConfig};
pub use stability::{
    adaptive_k, coassociation, merge_by_coassociation, stability_merge, AdaptiveK, BootstrapConfig, CoAssociation,
    StabilityMerge, TAU_SWEEP,
};

/// Old cluster id → new cluster id. New ids are contiguous from 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeMap {
    pub mapping: Vec<usize>,
}

impl MergeMap {
    pub fn identity(n_clusters: usize) -> Self {
        Self {
            mapping: (0..n_clusters).collect(),
        }
    }

    /// Builds a map from arbitrary group ids, renumbering groups in order of
    /// first appearance.
    pub fn from_groups(groups: &[usize]) -> Self {
        let mut seen: Vec<Option<usize>> = vec![None; groups.iter().max().map_or(0, |m| m + 1)];
        let mut next = 0;
        let mapping = groups
            .iter()
            .map(|&g| {
                *seen[g].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        Self { mapping }
    }

    pub fn n_new(&self) -> usize {
        self.mapping.iter().max().map_or(0, |m| m + 1)
    }

    pub fn is_identity(&self) -> bool {
        self.mapping.iter().enumerate().all(|(i, &m)| i == m)
    }

    /// Relabels `part`. Noise stays noise.
    pub fn apply(&self, part: &Partition) -> Result<Partition> {
        if self.mapping.len() != part.n_clusters() {
            return Err(Error::Config(format!(
                "merge map covers {} clusters, partition has {}",
                self.mapping.len(),
                part.n_clusters()
            )));
        }
        let labels: Vec<Label> = part
            .labels()
            .iter()
            .map(|&l| if l == NOISE { NOISE } else { self.mapping[l as usize] as Label })
            .collect();
        Ok(Partition::from_labels(&labels, AlgorithmTag::Consolidated))
    }
}

/// Summary written by the `consolidate` command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsolidationReport {
    pub merge_map: Option<MergeMap>,
    pub penalty_before: Option<f64>,
    pub penalty_after: Option<f64>,
    pub bic: Option<Vec<f64>>,
    pub k_hat: Option<usize>,
    pub k_dispersion: Option<f64>,
}
