//! BIRCH: single-pass CF-tree construction plus an optional global step.
//!
//! A point joins its closest leaf entry when the entry's radius after
//! absorbing it stays within `threshold`; otherwise it opens a new entry.
//! Nodes holding more than `branching` entries split around their farthest
//! pair of entry centroids. With `global_k` set, leaf-entry centroids are
//! clustered by k-means and each point inherits its entry's label; without
//! it, every leaf entry is a cluster.

use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, KMeansConfig};
use super::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::vector::{common_dim, sq_dist};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirchConfig {
    pub threshold: f64,
    pub branching: usize,
    pub global_k: Option<usize>,
    /// Seed for the global k-means step.
    pub seed: u64,
}

impl BirchConfig {
    pub fn new(threshold: f64) -> Self {
        Self {
            threshold,
            branching: 50,
            global_k: None,
            seed: 0,
        }
    }

    pub fn with_global_k(mut self, k: usize) -> Self {
        self.global_k = Some(k);
        self
    }
}

/// Clustering feature: point count, linear sum, and sum of squared norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfEntry {
    pub n: usize,
    pub ls: Vec<f64>,
    pub ss: f64,
}

impl CfEntry {
    pub fn from_point(x: &[f64]) -> Self {
        Self {
            n: 1,
            ls: x.to_vec(),
            ss: x.iter().map(|v| v * v).sum(),
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        let n = self.n as f64;
        self.ls.iter().map(|v| v / n).collect()
    }

    /// Root-mean-square distance of members to the centroid.
    pub fn radius(&self) -> f64 {
        let n = self.n as f64;
        let c2: f64 = self.ls.iter().map(|v| (v / n) * (v / n)).sum();
        (self.ss / n - c2).max(0.0).sqrt()
    }

    fn absorb(&mut self, other: &CfEntry) {
        self.n += other.n;
        self.ss += other.ss;
        for (a, b) in self.ls.iter_mut().zip(&other.ls) {
            *a += b;
        }
    }
}

/// Sum of two clustering features.
pub fn cf_merge(a: &CfEntry, b: &CfEntry) -> Result<CfEntry> {
    if a.ls.len() != b.ls.len() {
        return Err(Error::DimMismatch {
            expected: a.ls.len(),
            found: b.ls.len(),
        });
    }
    if a.n == 0 || b.n == 0 {
        return Err(Error::Config("clustering features must summarise at least one point".into()));
    }
    let mut out = a.clone();
    out.absorb(b);
    Ok(out)
}

struct Entry {
    cf: CfEntry,
    /// Child node for inner entries, leaf-entry id for leaves.
    child: usize,
}

struct Node {
    leaf: bool,
    entries: Vec<Entry>,
}

struct CfTree {
    nodes: Vec<Node>,
    root: usize,
    threshold: f64,
    branching: usize,
    leaf_count: usize,
}

impl CfTree {
    fn new(threshold: f64, branching: usize) -> Self {
        Self {
            nodes: vec![Node {
                leaf: true,
                entries: Vec::new(),
            }],
            root: 0,
            threshold,
            branching,
            leaf_count: 0,
        }
    }

    fn closest(&self, node: usize, x: &[f64]) -> Option<usize> {
        self.nodes[node]
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| (i, sq_dist(&e.cf.centroid(), x)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
    }

    /// Inserts `x` and returns the id of the leaf entry that holds it.
    fn insert(&mut self, x: &[f64]) -> usize {
        let point = CfEntry::from_point(x);
        let mut path = Vec::new();
        let mut node = self.root;
        while !self.nodes[node].leaf {
            let e = self.closest(node, x).expect("inner nodes are never empty");
            path.push((node, e));
            node = self.nodes[node].entries[e].child;
        }

        let leaf_id = match self.closest(node, x) {
            Some(e) => {
                let mut merged = self.nodes[node].entries[e].cf.clone();
                merged.absorb(&point);
                if merged.radius() <= self.threshold {
                    self.nodes[node].entries[e].cf = merged;
                    self.nodes[node].entries[e].child
                } else {
                    self.push_leaf_entry(node, point.clone())
                }
            }
            None => self.push_leaf_entry(node, point.clone()),
        };
        for &(n, e) in &path {
            self.nodes[n].entries[e].cf.absorb(&point);
        }

        let mut child = node;
        for &(parent, e) in path.iter().rev() {
            if self.nodes[child].entries.len() <= self.branching {
                return leaf_id;
            }
            let sibling = self.split(child);
            self.nodes[parent].entries[e].cf = self.summary(child);
            let summary = self.summary(sibling);
            self.nodes[parent].entries.push(Entry {
                cf: summary,
                child: sibling,
            });
            child = parent;
        }
        if self.nodes[child].entries.len() > self.branching {
            let sibling = self.split(child);
            let new_root = Node {
                leaf: false,
                entries: vec![
                    Entry {
                        cf: self.summary(child),
                        child,
                    },
                    Entry {
                        cf: self.summary(sibling),
                        child: sibling,
                    },
                ],
            };
            self.nodes.push(new_root);
            self.root = self.nodes.len() - 1;
        }
        leaf_id
    }

    fn push_leaf_entry(&mut self, node: usize, cf: CfEntry) -> usize {
        let id = self.leaf_count;
        self.leaf_count += 1;
        self.nodes[node].entries.push(Entry { cf, child: id });
        id
    }

    fn summary(&self, node: usize) -> CfEntry {
        let entries = &self.nodes[node].entries;
        let mut acc = entries[0].cf.clone();
        for e in &entries[1..] {
            acc.absorb(&e.cf);
        }
        acc
    }

    /// Splits an overfull node around its farthest pair of entries; returns the new sibling.
    fn split(&mut self, node: usize) -> usize {
        let entries = std::mem::take(&mut self.nodes[node].entries);
        let centroids: Vec<Vec<f64>> = entries.iter().map(|e| e.cf.centroid()).collect();
        let (mut sa, mut sb, mut far) = (0, 1, -1.0);
        for i in 0..centroids.len() {
            for j in (i + 1)..centroids.len() {
                let d = sq_dist(&centroids[i], &centroids[j]);
                if d > far {
                    (sa, sb, far) = (i, j, d);
                }
            }
        }
        let leaf = self.nodes[node].leaf;
        let mut keep = Vec::new();
        let mut moved = Vec::new();
        for (i, e) in entries.into_iter().enumerate() {
            let to_b = if i == sa {
                false
            } else if i == sb {
                true
            } else {
                sq_dist(&centroids[i], &centroids[sb]) < sq_dist(&centroids[i], &centroids[sa])
            };
            if to_b {
                moved.push(e);
            } else {
                keep.push(e);
            }
        }
        self.nodes[node].entries = keep;
        self.nodes.push(Node {
            leaf,
            entries: moved,
        });
        self.nodes.len() - 1
    }

    /// Leaf entries indexed by id.
    fn leaf_entries(&self) -> Vec<CfEntry> {
        let mut out = vec![None; self.leaf_count];
        for node in self.nodes.iter().filter(|n| n.leaf) {
            for e in &node.entries {
                out[e.child] = Some(e.cf.clone());
            }
        }
        out.into_iter().map(|e| e.expect("every leaf id is live")).collect()
    }
}

/// Result of a BIRCH run with its leaf summaries.
#[derive(Debug, Clone)]
pub struct BirchFit {
    pub partition: Partition,
    pub leaf_entries: Vec<CfEntry>,
    /// Leaf-entry id of every point.
    pub point_entry: Vec<usize>,
}

pub fn birch<P: AsRef<[f64]>>(data: &[P], cfg: &BirchConfig) -> Result<Partition> {
    birch_fit(data, cfg).map(|f| f.partition)
}

pub fn birch_fit<P: AsRef<[f64]>>(data: &[P], cfg: &BirchConfig) -> Result<BirchFit> {
    if data.is_empty() {
        return Err(Error::InsufficientData("BIRCH needs at least one point".into()));
    }
    if !(cfg.threshold >= 0.0) || !cfg.threshold.is_finite() {
        return Err(Error::Config(format!("threshold must be non-negative, got {}", cfg.threshold)));
    }
    if cfg.branching < 2 {
        return Err(Error::Config("branching factor must be at least 2".into()));
    }
    common_dim(data)?;

    let mut tree = CfTree::new(cfg.threshold, cfg.branching);
    let point_entry: Vec<usize> = data.iter().map(|p| tree.insert(p.as_ref())).collect();
    let leaf_entries = tree.leaf_entries();

    let raw: Vec<Label> = match cfg.global_k {
        None => point_entry.iter().map(|&e| e as Label).collect(),
        Some(k) => {
            if k == 0 || k > leaf_entries.len() {
                return Err(Error::Config(format!(
                    "global_k = {k} but the CF tree has {} leaf entries",
                    leaf_entries.len()
                )));
            }
            let centroids: Vec<Vec<f64>> = leaf_entries.iter().map(CfEntry::centroid).collect();
            let global = kmeans(&centroids, &KMeansConfig::new(k).with_seed(cfg.seed))?;
            point_entry.iter().map(|&e| global.labels()[e]).collect()
        }
    };
    Ok(BirchFit {
        partition: Partition::from_labels(&raw, AlgorithmTag::Birch),
        leaf_entries,
        point_entry,
    })
}
