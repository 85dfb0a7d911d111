//! DBSCAN over Euclidean distance.
//!
//! A point is core when at least `min_pts` points, itself included, lie
//! within `eps` (inclusive). Clusters are the `eps`-connected components of
//! core points, numbered in order of their lowest core index. A border point
//! joins the cluster of its lowest-indexed core neighbour. Everything else
//! is noise.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::vector::{common_dim, dist};
use crate::{Label, NOISE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanConfig {
    pub eps: f64,
    pub min_pts: usize,
}

pub fn dbscan<P: AsRef<[f64]>>(data: &[P], cfg: &DbscanConfig) -> Result<Partition> {
    if !(cfg.eps > 0.0) || !cfg.eps.is_finite() {
        return Err(Error::Config(format!("eps must be positive, got {}", cfg.eps)));
    }
    if cfg.min_pts == 0 {
        return Err(Error::Config("min_pts must be positive".into()));
    }
    common_dim(data)?;
    let n = data.len();

    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| dist(data[i].as_ref(), data[j].as_ref()) <= cfg.eps)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= cfg.min_pts).collect();

    let mut labels = vec![NOISE; n];
    let mut next: Label = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        queue.push_back(start);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbours[p] {
                if core[q] && labels[q] == NOISE {
                    labels[q] = next;
                    queue.push_back(q);
                }
            }
        }
        next += 1;
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        if let Some(&c) = neighbours[i].iter().find(|&&j| core[j]) {
            labels[i] = labels[c];
        }
    }
    Partition::try_new(labels, next as usize, AlgorithmTag::Dbscan)
}
