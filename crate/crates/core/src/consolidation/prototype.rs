use serde::{Deserialize, Serialize};

use super::ConstraintSet;
use crate::cluster::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::vector::{common_dim, dist, mean_of};
use crate::{Label, NOISE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedConfig {
    /// Number of prototypes to keep.
    pub budget: usize,
    /// Extra cost of leaving the prototype of a point's current cluster.
    pub inertia: f64,
    /// Recompute prototypes as member means and reassign once more.
    pub mean_update: bool,
}

impl SeedConfig {
    pub fn new(budget: usize, inertia: f64) -> Self {
        Self {
            budget,
            inertia,
            mean_update: false,
        }
    }
}

fn medoid<P: AsRef<[f64]>>(data: &[P], members: &[usize]) -> usize {
    let mut best = (members[0], f64::INFINITY);
    for &i in members {
        let cost: f64 = members.iter().map(|&j| dist(data[i].as_ref(), data[j].as_ref())).sum();
        if cost < best.1 {
            best = (i, cost);
        }
    }
    best.0
}

/// One assignment pass against fixed prototypes. `anchors[j]` is pinned to
/// prototype `j`. Returns the prototype index per point.
fn assign<P: AsRef<[f64]>>(
    data: &[P],
    prototypes: &[Vec<f64>],
    anchors: &[usize],
    home: &[Option<usize>],
    inertia: f64,
    cons: Option<&ConstraintSet>,
) -> Vec<usize> {
    let n = data.len();
    let mut out: Vec<Option<usize>> = vec![None; n];
    for (j, &a) in anchors.iter().enumerate() {
        out[a] = Some(j);
    }
    let mut cannot: Vec<Vec<usize>> = vec![Vec::new(); n];
    if let Some(c) = cons {
        for l in &c.cannot_links {
            cannot[l.i].push(l.j);
            cannot[l.j].push(l.i);
        }
    }
    for i in 0..n {
        if out[i].is_some() {
            continue;
        }
        let cost = |j: usize| {
            let stay = home[i] == Some(j);
            dist(data[i].as_ref(), &prototypes[j]) + if stay { 0.0 } else { inertia }
        };
        let feasible = |j: usize| !cannot[i].iter().any(|&o| out[o] == Some(j));
        let pick = |only_feasible: bool| {
            (0..prototypes.len())
                .filter(|&j| !only_feasible || feasible(j))
                .min_by(|&a, &b| cost(a).total_cmp(&cost(b)))
        };
        // With every prototype blocked the constraint cannot be honoured.
        out[i] = pick(true).or_else(|| pick(false));
    }
    out.into_iter().map(|o| o.expect("every point assigned")).collect()
}

/// Keeps the medoids of the `budget` largest clusters as prototypes and
/// assigns every other point to the cheapest one in a single index-order
/// pass, skipping prototypes that a cannot-link with an already-assigned
/// point rules out. Always yields exactly `budget` clusters.
pub fn prototype_seed<P: AsRef<[f64]>>(
    data: &[P],
    part: &Partition,
    cfg: &SeedConfig,
    cons: Option<&ConstraintSet>,
) -> Result<Partition> {
    if data.len() != part.len() {
        return Err(Error::LabelCount {
            labels: part.len(),
            items: data.len(),
        });
    }
    let dim = common_dim(data)?;
    if cfg.budget == 0 || cfg.budget > part.n_clusters() {
        return Err(Error::Config(format!(
            "budget {} must lie in 1..={}",
            cfg.budget,
            part.n_clusters()
        )));
    }
    if !(cfg.inertia >= 0.0) {
        return Err(Error::Config("inertia must be non-negative".into()));
    }
    if let Some(c) = cons {
        c.validate(data.len())?;
    }
    let members = part.members();
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));
    order.truncate(cfg.budget);

    let anchors: Vec<usize> = order.iter().map(|&c| medoid(data, &members[c])).collect();
    let mut prototypes: Vec<Vec<f64>> = anchors.iter().map(|&a| data[a].as_ref().to_vec()).collect();
    let mut slot = vec![None; members.len()];
    for (j, &c) in order.iter().enumerate() {
        slot[c] = Some(j);
    }
    let home: Vec<Option<usize>> = part
        .labels()
        .iter()
        .map(|&l| if l == NOISE { None } else { slot[l as usize] })
        .collect();

    let mut assigned = assign(data, &prototypes, &anchors, &home, cfg.inertia, cons);
    if cfg.mean_update {
        for (j, p) in prototypes.iter_mut().enumerate() {
            *p = mean_of(
                assigned.iter().zip(data).filter(|(&a, _)| a == j).map(|(_, x)| x.as_ref()),
                dim,
            );
        }
        let home: Vec<Option<usize>> = assigned.iter().map(|&a| Some(a)).collect();
        assigned = assign(data, &prototypes, &anchors, &home, cfg.inertia, cons);
    }
    let labels: Vec<Label> = assigned.into_iter().map(|a| a as Label).collect();
    Ok(Partition::from_labels(&labels, AlgorithmTag::Consolidated))
}
