use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::metrics::centroid_silhouette;
use crate::tuning::AlgoConfig;
use crate::vector::{common_dim, mean_of, sq_dist};
use crate::{Label, NOISE};

/// Merge thresholds tried by [`adaptive_k`], in order.
pub const TAU_SWEEP: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub runs: usize,
    /// Fraction of points drawn (without replacement) per run.
    pub subsample: f64,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(runs: usize, subsample: f64, seed: u64) -> Self {
        Self { runs, subsample, seed }
    }
}

/// Pairwise co-clustering frequencies over bootstrap reruns. Each entry is
/// the fraction of runs, among those that sampled both points, in which the
/// two shared a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CoAssociation {
    n: usize,
    runs: usize,
    together: Vec<u32>,
    cosampled: Vec<u32>,
}

impl CoAssociation {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// Number of runs that sampled both `i` and `j`.
    pub fn cosampled(&self, i: usize, j: usize) -> u32 {
        self.cosampled[i * self.n + j]
    }

    /// Co-association of `i` and `j`; 0 when never sampled together.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let k = i * self.n + j;
        match self.cosampled[k] {
            0 => 0.0,
            c => self.together[k] as f64 / c as f64,
        }
    }

    /// Mean over co-sampled pairs `(i, j)`, `i` from `a`, `j` from `b`,
    /// `i != j`. `None` when no such pair exists.
    fn mean_between(&self, a: &[usize], b: &[usize]) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for &i in a {
            for &j in b {
                if i != j && self.cosampled(i, j) > 0 {
                    sum += self.get(i, j);
                    count += 1;
                }
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// Runs `base_cfg` on seeded subsamples and accumulates co-association.
/// Also returns the cluster count of every run, in run order.
pub fn coassociation<P: AsRef<[f64]> + Sync>(
    data: &[P],
    base_cfg: &AlgoConfig,
    boot: &BootstrapConfig,
) -> Result<(CoAssociation, Vec<usize>)> {
    let n = data.len();
    common_dim(data)?;
    if boot.runs < 2 {
        return Err(Error::Config("stability needs at least two runs".into()));
    }
    if !(boot.subsample > 0.0 && boot.subsample <= 1.0) {
        return Err(Error::Config(format!("subsample {} outside (0, 1]", boot.subsample)));
    }
    let m = (boot.subsample * n as f64).round() as usize;
    if m < 2 {
        return Err(Error::InsufficientData(format!(
            "subsample of {n} points at {} keeps {m}",
            boot.subsample
        )));
    }
    let mut master = ChaCha8Rng::seed_from_u64(boot.seed);
    let seeds: Vec<u64> = (0..boot.runs).map(|_| master.random()).collect();

    let runs: Vec<(Vec<usize>, Partition)> = seeds
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let mut idx = sample(&mut rng, n, m).into_vec();
            idx.sort_unstable();
            let sub: Vec<&[f64]> = idx.iter().map(|&i| data[i].as_ref()).collect();
            let mut cfg = *base_cfg;
            match &mut cfg {
                AlgoConfig::Kmeans(c) => c.seed = s,
                AlgoConfig::Birch(c) => c.seed = s,
                _ => {}
            }
            cfg.run(&sub).map(|p| (idx, p))
        })
        .collect::<Result<_>>()?;

    let mut together = vec![0u32; n * n];
    let mut cosampled = vec![0u32; n * n];
    let mut counts = Vec::with_capacity(runs.len());
    for (idx, p) in &runs {
        counts.push(p.n_clusters());
        let labels = p.labels();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                cosampled[i * n + j] += 1;
                if i == j || (labels[a] != NOISE && labels[a] == labels[b]) {
                    together[i * n + j] += 1;
                }
            }
        }
    }
    Ok((
        CoAssociation {
            n,
            runs: boot.runs,
            together,
            cosampled,
        },
        counts,
    ))
}

/// Applies one merge threshold to `base`: clusters whose mean
/// between-cluster co-association reaches `tau` are joined (transitively),
/// the merged groups whose mean within co-association stays below `tau` are
/// dissolved, and dissolved points move to the nearest surviving centroid.
/// Without survivors every clustered point ends up in one cluster.
pub fn merge_by_coassociation<P: AsRef<[f64]>>(
    data: &[P],
    base: &Partition,
    co: &CoAssociation,
    tau: f64,
) -> Result<Partition> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Config(format!("tau_merge {tau} outside (0, 1)")));
    }
    if data.len() != base.len() || co.len() != base.len() {
        return Err(Error::LabelCount {
            labels: base.len(),
            items: data.len(),
        });
    }
    let dim = common_dim(data)?;
    let members = base.members();
    let c = members.len();

    let mut parent: Vec<usize> = (0..c).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for a in 0..c {
        for b in (a + 1)..c {
            if co.mean_between(&members[a], &members[b]).is_some_and(|v| v >= tau) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); c];
    for a in 0..c {
        let r = find(&mut parent, a);
        groups[r].extend_from_slice(&members[a]);
    }
    let groups: Vec<Vec<usize>> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    let stable: Vec<bool> = groups
        .iter()
        .map(|g| co.mean_between(g, g).is_some_and(|v| v >= tau))
        .collect();

    let mut labels: Vec<Label> = vec![NOISE; base.len()];
    let survivors: Vec<&Vec<usize>> = groups.iter().zip(&stable).filter(|(_, &s)| s).map(|(g, _)| g).collect();
    if survivors.is_empty() {
        for (l, &b) in labels.iter_mut().zip(base.labels()) {
            if b != NOISE {
                *l = 0;
            }
        }
        return Ok(Partition::from_labels(&labels, AlgorithmTag::Consolidated));
    }
    let centroids: Vec<Vec<f64>> = survivors
        .iter()
        .map(|g| mean_of(g.iter().map(|&i| data[i].as_ref()), dim))
        .collect();
    for (k, g) in survivors.iter().enumerate() {
        for &i in g.iter() {
            labels[i] = k as Label;
        }
    }
    for (g, _) in groups.iter().zip(&stable).filter(|(_, &s)| !s) {
        for &i in g {
            let nearest = (0..centroids.len())
                .min_by(|&a, &b| {
                    sq_dist(data[i].as_ref(), &centroids[a]).total_cmp(&sq_dist(data[i].as_ref(), &centroids[b]))
                })
                .expect("survivors non-empty");
            labels[i] = nearest as Label;
        }
    }
    Ok(Partition::from_labels(&labels, AlgorithmTag::Consolidated))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMerge {
    pub partition: Partition,
    /// `base_cfg` on the full data, before merging.
    pub base: Partition,
    pub coassociation: CoAssociation,
    pub run_cluster_counts: Vec<usize>,
}

/// Bootstrap co-association followed by one merge at `tau_merge`.
pub fn stability_merge<P: AsRef<[f64]> + Sync>(
    data: &[P],
    base_cfg: &AlgoConfig,
    boot: &BootstrapConfig,
    tau_merge: f64,
) -> Result<StabilityMerge> {
    let (co, counts) = coassociation(data, base_cfg, boot)?;
    let base = base_cfg.run(data)?;
    let partition = merge_by_coassociation(data, &base, &co, tau_merge)?;
    Ok(StabilityMerge {
        partition,
        base,
        coassociation: co,
        run_cluster_counts: counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveK {
    pub partition: Partition,
    pub k_hat: usize,
    /// Population standard deviation of the per-run cluster counts.
    pub k_dispersion: f64,
    pub tau: f64,
    /// `(tau, simplified silhouette, cluster count)` per swept threshold.
    pub sweep: Vec<(f64, Option<f64>, usize)>,
}

/// Sweeps [`TAU_SWEEP`] over one co-association matrix and keeps the merged
/// partition with the highest simplified silhouette. Undefined scores rank
/// last; ties and the all-undefined case go to the lowest threshold.
pub fn adaptive_k<P: AsRef<[f64]> + Sync>(
    data: &[P],
    base_cfg: &AlgoConfig,
    boot: &BootstrapConfig,
) -> Result<AdaptiveK> {
    let (co, counts) = coassociation(data, base_cfg, boot)?;
    let base = base_cfg.run(data)?;
    let mut sweep = Vec::with_capacity(TAU_SWEEP.len());
    let mut best: Option<(usize, Option<f64>, Partition)> = None;
    for (t, &tau) in TAU_SWEEP.iter().enumerate() {
        let p = merge_by_coassociation(data, &base, &co, tau)?;
        let score = centroid_silhouette(data, &p)?;
        sweep.push((tau, score, p.n_clusters()));
        let better = match (&best, score) {
            (None, _) => true,
            (Some((_, None, _)), Some(_)) => true,
            (Some((_, Some(b), _)), Some(s)) => s > *b,
            _ => false,
        };
        if better {
            best = Some((t, score, p));
        }
    }
    let (t, _, partition) = best.expect("sweep non-empty");
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / counts.len() as f64;
    Ok(AdaptiveK {
        k_hat: partition.n_clusters(),
        partition,
        k_dispersion: var.sqrt(),
        tau: TAU_SWEEP[t],
        sweep,
    })
}
