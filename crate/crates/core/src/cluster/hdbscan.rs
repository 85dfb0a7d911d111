//! HDBSCAN with excess-of-mass cluster extraction.
//!
//! Pipeline: core distances (distance to the `min_samples`-th nearest point,
//! the point itself counting as the first) → mutual-reachability distances
//! → Prim minimum spanning tree → single-linkage dendrogram → condensed tree
//! at `min_cluster_size` → stability-maximising flat selection.
//!
//! The root may only be selected when it never splits into two clusters of
//! at least `min_cluster_size` points; in that case every point belongs to a
//! single cluster. Merges at zero distance are given a finite density
//! `λ = 2 / w_min`, where `w_min` is the smallest positive MST weight, so
//! duplicate points never produce infinite stabilities.

use serde::{Deserialize, Serialize};

use super::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::vector::{common_dim, distance_matrix};
use crate::{Label, NOISE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HdbscanConfig {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    /// Neighbours consulted when [`super::hdbscan_knn`] relabels noise.
    pub knn_k: usize,
}

impl HdbscanConfig {
    pub fn new(min_cluster_size: usize, min_samples: usize) -> Self {
        Self {
            min_cluster_size,
            min_samples,
            knn_k: 5,
        }
    }

    fn check(&self) -> Result<()> {
        if self.min_cluster_size < 2 {
            return Err(Error::Config("min_cluster_size must be at least 2".into()));
        }
        if self.min_samples == 0 || self.knn_k == 0 {
            return Err(Error::Config("min_samples and knn_k must be positive".into()));
        }
        Ok(())
    }
}

/// Edge of the mutual-reachability spanning tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Intermediate products of a run, kept for inspection and testing.
#[derive(Debug, Clone)]
pub struct HdbscanFit {
    pub partition: Partition,
    pub core_distances: Vec<f64>,
    pub mst: Vec<MstEdge>,
    /// Stability of every condensed-tree cluster, root first.
    pub stabilities: Vec<f64>,
}

pub fn hdbscan<P: AsRef<[f64]>>(data: &[P], cfg: &HdbscanConfig) -> Result<Partition> {
    hdbscan_fit(data, cfg).map(|f| f.partition)
}

/// Core distance of every point: distance to its `min_samples`-th nearest
/// point, counting the point itself.
pub fn core_distances(dists: &[f64], n: usize, min_samples: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut row = dists[i * n..(i + 1) * n].to_vec();
            row.sort_by(f64::total_cmp);
            row[min_samples - 1]
        })
        .collect()
}

/// Minimum spanning tree of the mutual-reachability graph, via dense Prim.
pub fn mutual_reachability_mst<P: AsRef<[f64]>>(data: &[P], min_samples: usize) -> Result<Vec<MstEdge>> {
    let (dists, core) = prepare(data, min_samples)?;
    Ok(prim(&dists, &core, data.len()))
}

fn prepare<P: AsRef<[f64]>>(data: &[P], min_samples: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    common_dim(data)?;
    let n = data.len();
    if min_samples == 0 {
        return Err(Error::Config("min_samples must be positive".into()));
    }
    if n < min_samples {
        return Err(Error::InsufficientData(format!(
            "{n} points but min_samples = {min_samples}"
        )));
    }
    let dists = distance_matrix(data);
    let core = core_distances(&dists, n, min_samples);
    Ok((dists, core))
}

pub(crate) fn mutual_reachability(dists: &[f64], core: &[f64], n: usize, i: usize, j: usize) -> f64 {
    dists[i * n + j].max(core[i]).max(core[j])
}

fn prim(dists: &[f64], core: &[f64], n: usize) -> Vec<MstEdge> {
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return edges;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        for j in 0..n {
            if !in_tree[j] {
                let w = mutual_reachability(dists, core, n, current, j);
                if w < best[j] {
                    best[j] = w;
                    parent[j] = current;
                }
            }
        }
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
            .expect("vertices remain");
        in_tree[next] = true;
        edges.push(MstEdge {
            a: parent[next],
            b: next,
            weight: best[next],
        });
        current = next;
    }
    edges
}

struct LinkageNode {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

/// Single-linkage merges from the MST; node ids `>= n` are internal.
fn single_linkage(mst: &[MstEdge], n: usize) -> Vec<LinkageNode> {
    let mut sorted = mst.to_vec();
    sorted.sort_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then(x.a.min(x.b).cmp(&y.a.min(y.b)))
            .then(x.a.max(x.b).cmp(&y.a.max(y.b)))
    });
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut nodes = Vec::with_capacity(n.saturating_sub(1));
    for (k, e) in sorted.iter().enumerate() {
        let ra = find(&mut parent, e.a);
        let rb = find(&mut parent, e.b);
        let id = n + k;
        parent[ra] = id;
        parent[rb] = id;
        size[id] = size[ra] + size[rb];
        nodes.push(LinkageNode {
            left: ra,
            right: rb,
            distance: e.weight,
            size: size[id],
        });
    }
    nodes
}

struct CondensedCluster {
    parent: Option<usize>,
    birth: f64,
    stability: f64,
    children: Vec<usize>,
    size: usize,
}

struct CondensedTree {
    clusters: Vec<CondensedCluster>,
    /// Cluster each point last belonged to before falling out.
    point_cluster: Vec<usize>,
}

fn condense(nodes: &[LinkageNode], n: usize, min_cluster_size: usize, lambda_of: impl Fn(f64) -> f64) -> CondensedTree {
    let size_of = |id: usize| if id < n { 1 } else { nodes[id - n].size };
    let mut clusters = vec![CondensedCluster {
        parent: None,
        birth: 0.0,
        stability: 0.0,
        children: Vec::new(),
        size: n,
    }];
    let mut point_cluster = vec![0usize; n];
    if n < 2 {
        return CondensedTree { clusters, point_cluster };
    }

    let fall_out = |clusters: &mut Vec<CondensedCluster>,
                        point_cluster: &mut Vec<usize>,
                        root: usize,
                        cluster: usize,
                        lambda: f64| {
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            if id < n {
                point_cluster[id] = cluster;
                let c = &mut clusters[cluster];
                c.stability += lambda - c.birth;
            } else {
                stack.push(nodes[id - n].left);
                stack.push(nodes[id - n].right);
            }
        }
    };

    let mut work = vec![(2 * n - 2, 0usize)];
    while let Some((id, cluster)) = work.pop() {
        if id < n {
            // Only reachable when a cluster shrinks to a single point.
            let birth = clusters[cluster].birth;
            fall_out(&mut clusters, &mut point_cluster, id, cluster, birth);
            continue;
        }
        let node = &nodes[id - n];
        let lambda = lambda_of(node.distance);
        let (l, r) = (node.left, node.right);
        let (ls, rs) = (size_of(l), size_of(r));
        match (ls >= min_cluster_size, rs >= min_cluster_size) {
            (true, true) => {
                let birth = clusters[cluster].birth;
                clusters[cluster].stability += (lambda - birth) * (ls + rs) as f64;
                for (child, sz) in [(l, ls), (r, rs)] {
                    let cid = clusters.len();
                    clusters.push(CondensedCluster {
                        parent: Some(cluster),
                        birth: lambda,
                        stability: 0.0,
                        children: Vec::new(),
                        size: sz,
                    });
                    clusters[cluster].children.push(cid);
                    work.push((child, cid));
                }
            }
            (true, false) => {
                fall_out(&mut clusters, &mut point_cluster, r, cluster, lambda);
                work.push((l, cluster));
            }
            (false, true) => {
                fall_out(&mut clusters, &mut point_cluster, l, cluster, lambda);
                work.push((r, cluster));
            }
            (false, false) => {
                fall_out(&mut clusters, &mut point_cluster, l, cluster, lambda);
                fall_out(&mut clusters, &mut point_cluster, r, cluster, lambda);
            }
        }
    }
    CondensedTree { clusters, point_cluster }
}

/// Excess-of-mass selection. Children always carry larger ids than parents.
fn select_clusters(tree: &CondensedTree, min_cluster_size: usize) -> Vec<bool> {
    let m = tree.clusters.len();
    let mut selected = vec![false; m];
    let mut subtree = vec![0.0; m];
    for c in (1..m).rev() {
        let cl = &tree.clusters[c];
        let child_sum: f64 = cl.children.iter().map(|&ch| subtree[ch]).sum();
        if !cl.children.is_empty() && child_sum > cl.stability {
            subtree[c] = child_sum;
        } else {
            subtree[c] = cl.stability;
            selected[c] = true;
            let mut stack = cl.children.clone();
            while let Some(d) = stack.pop() {
                selected[d] = false;
                stack.extend(tree.clusters[d].children.iter().copied());
            }
        }
    }
    let root = &tree.clusters[0];
    if root.children.is_empty() && root.size >= min_cluster_size {
        selected[0] = true;
    }
    selected
}

pub fn hdbscan_fit<P: AsRef<[f64]>>(data: &[P], cfg: &HdbscanConfig) -> Result<HdbscanFit> {
    cfg.check()?;
    let n = data.len();
    if n == 0 {
        return Err(Error::InsufficientData("no points".into()));
    }
    let (dists, core) = prepare(data, cfg.min_samples)?;
    let mst = prim(&dists, &core, n);
    let nodes = single_linkage(&mst, n);

    let w_min = mst
        .iter()
        .map(|e| e.weight)
        .filter(|&w| w > 0.0)
        .fold(f64::INFINITY, f64::min);
    let zero_lambda = if w_min.is_finite() { 2.0 / w_min } else { 1.0 };
    let lambda_of = |d: f64| if d > 0.0 { 1.0 / d } else { zero_lambda };

    let tree = condense(&nodes, n, cfg.min_cluster_size, lambda_of);
    let selected = select_clusters(&tree, cfg.min_cluster_size);

    let mut raw = vec![NOISE; n];
    for (p, slot) in raw.iter_mut().enumerate() {
        let mut c = Some(tree.point_cluster[p]);
        while let Some(id) = c {
            if selected[id] {
                *slot = id as Label;
                break;
            }
            c = tree.clusters[id].parent;
        }
    }
    Ok(HdbscanFit {
        partition: Partition::from_labels(&raw, AlgorithmTag::Hdbscan),
        core_distances: core,
        mst,
        stabilities: tree.clusters.iter().map(|c| c.stability).collect(),
    })
}
