use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::MergeMap;
use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::NOISE;

/// Weighted pairwise hint between two items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

impl Link {
    pub fn new(i: usize, j: usize, weight: f64) -> Self {
        Self { i, j, weight }
    }

    fn key(&self) -> (usize, usize) {
        (self.i.min(self.j), self.i.max(self.j))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    #[serde(default)]
    pub must_links: Vec<Link>,
    #[serde(default)]
    pub cannot_links: Vec<Link>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        self.must_links.is_empty() && self.cannot_links.is_empty()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut must = HashSet::new();
        for (kind, links) in [("must", &self.must_links), ("cannot", &self.cannot_links)] {
            for l in links {
                if l.i >= n || l.j >= n {
                    return Err(Error::IndexOutOfRange {
                        index: l.i.max(l.j),
                        len: n,
                    });
                }
                if l.i == l.j {
                    return Err(Error::Constraint(format!("{kind}-link joins item {} to itself", l.i)));
                }
                if !(l.weight.is_finite() && l.weight > 0.0) {
                    return Err(Error::Constraint(format!(
                        "{kind}-link ({}, {}) has non-positive weight {}",
                        l.i, l.j, l.weight
                    )));
                }
            }
        }
        for l in &self.must_links {
            must.insert(l.key());
        }
        if let Some(l) = self.cannot_links.iter().find(|l| must.contains(&l.key())) {
            return Err(Error::Constraint(format!(
                "pair ({}, {}) is both must-link and cannot-link",
                l.i, l.j
            )));
        }
        Ok(())
    }
}

/// Total weight of violated constraints. A must-link holds only when both
/// items share a cluster; a cannot-link is violated only when they do.
pub fn penalty(part: &Partition, cons: &ConstraintSet) -> f64 {
    let l = part.labels();
    let together = |a: &Link| l[a.i] != NOISE && l[a.i] == l[a.j];
    let must = cons.must_links.iter().filter(|a| !together(a)).fold(0.0, |s, a| s + a.weight);
    cons.cannot_links.iter().filter(|a| together(a)).fold(must, |s, a| s + a.weight)
}

/// Greedy whole-cluster merging: repeatedly applies the merge with the
/// largest strict penalty decrease. Clusters are never split.
pub fn constraint_consolidate(part: &Partition, cons: &ConstraintSet) -> Result<(Partition, MergeMap)> {
    cons.validate(part.len())?;
    let c = part.n_clusters();
    let labels = part.labels();
    // gain[a][b]: must weight minus cannot weight between clusters a and b.
    let mut gain = vec![vec![0.0; c]; c];
    for (links, sign) in [(&cons.must_links, 1.0), (&cons.cannot_links, -1.0)] {
        for l in links {
            let (a, b) = (labels[l.i], labels[l.j]);
            if a == NOISE || b == NOISE || a == b {
                continue;
            }
            let (a, b) = (a as usize, b as usize);
            gain[a][b] += sign * l.weight;
            gain[b][a] += sign * l.weight;
        }
    }
    let mut group: Vec<usize> = (0..c).collect();
    let mut alive = vec![true; c];
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in (0..c).filter(|&a| alive[a]) {
            for b in ((a + 1)..c).filter(|&b| alive[b]) {
                let g = gain[a][b];
                if g > 0.0 && best.is_none_or(|(_, _, bg)| g > bg) {
                    best = Some((a, b, g));
                }
            }
        }
        let Some((a, b, _)) = best else { break };
        alive[b] = false;
        for x in 0..c {
            let moved = gain[b][x];
            gain[a][x] += moved;
            gain[x][a] += moved;
        }
        gain[a][a] = 0.0;
        for g in group.iter_mut().filter(|g| **g == b) {
            *g = a;
        }
    }
    let map = MergeMap::from_groups(&group);
    Ok((map.apply(part)?, map))
}
