//! Lloyd's k-means seeded with greedy k-means++.
//!
//! Seeding: the first centre is drawn uniformly; every further centre is the
//! best of `2 + ⌊ln k⌋` candidates drawn proportionally to squared distance
//! from the existing centres, "best" meaning the smallest resulting potential.
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so a seed gives
//! the same partition on every platform.
//!
//! When a cluster empties, the point farthest from its own centroid (taken
//! from a cluster with at least two members) is moved into it, so the result
//! always has exactly `k` non-empty clusters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::vector::{common_dim, sq_dist};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Stop once the summed squared centroid shift falls below this.
    pub tol: f64,
}

impl KMeansConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            max_iter: 300,
            seed: 0,
            tol: 0.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Everything a k-means run produces.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    /// Cluster index per point, matching `centroids` (not canonicalised).
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Inertia after seeding, then after every centroid update.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansFit {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }

    pub fn partition(&self) -> Partition {
        let raw: Vec<Label> = self.assignment.iter().map(|&a| a as Label).collect();
        Partition::from_labels(&raw, AlgorithmTag::Kmeans)
    }
}

pub fn kmeans<P: AsRef<[f64]>>(data: &[P], cfg: &KMeansConfig) -> Result<Partition> {
    kmeans_fit(data, cfg).map(|f| f.partition())
}

pub fn kmeans_fit<P: AsRef<[f64]>>(data: &[P], cfg: &KMeansConfig) -> Result<KMeansFit> {
    let n = data.len();
    let dim = common_dim(data)?;
    if cfg.k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if cfg.k > n {
        return Err(Error::Config(format!("k = {} exceeds {n} points", cfg.k)));
    }
    if cfg.max_iter == 0 {
        return Err(Error::Config("max_iter must be positive".into()));
    }
    if !(cfg.tol >= 0.0) {
        return Err(Error::Config("tol must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = greedy_kmeanspp(data, cfg.k, &mut rng);
    let mut assignment = nearest_assignment(data, &centroids);
    let mut history = vec![inertia(data, &assignment, &centroids)];
    let mut iterations = 0;
    let mut converged = false;

    loop {
        repair_empty_clusters(data, &mut assignment, &mut centroids);
        let updated = cluster_means(data, &assignment, cfg.k, dim);
        let shift: f64 = updated
            .iter()
            .zip(&centroids)
            .map(|(a, b)| sq_dist(a, b))
            .sum();
        centroids = updated;
        history.push(inertia(data, &assignment, &centroids));
        iterations += 1;
        if shift < cfg.tol {
            converged = true;
            break;
        }
        if iterations >= cfg.max_iter {
            break;
        }
        let next = nearest_assignment(data, &centroids);
        if next == assignment {
            converged = true;
            break;
        }
        assignment = next;
    }

    Ok(KMeansFit {
        assignment,
        centroids,
        inertia_history: history,
        iterations,
        converged,
    })
}

fn greedy_kmeanspp<P: AsRef<[f64]>>(data: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let first = rng.random_range(0..n);
    let mut centres = vec![data[first].as_ref().to_vec()];
    let mut closest: Vec<f64> = data
        .iter()
        .map(|p| sq_dist(p.as_ref(), &centres[0]))
        .collect();

    while centres.len() < k {
        let potential: f64 = closest.iter().sum();
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for &c in &closest {
            acc += c;
            cumulative.push(acc);
        }
        let mut best: Option<(f64, usize, Vec<f64>)> = None;
        for _ in 0..trials {
            let candidate = if potential > 0.0 {
                let r = rng.random::<f64>() * potential;
                cumulative.partition_point(|&c| c <= r).min(n - 1)
            } else {
                rng.random_range(0..n)
            };
            let cand = data[candidate].as_ref();
            let updated: Vec<f64> = data
                .iter()
                .zip(&closest)
                .map(|(p, &c)| c.min(sq_dist(p.as_ref(), cand)))
                .collect();
            let pot: f64 = updated.iter().sum();
            if best.as_ref().is_none_or(|(b, _, _)| pot < *b) {
                best = Some((pot, candidate, updated));
            }
        }
        let (_, idx, updated) = best.expect("at least two trials");
        centres.push(data[idx].as_ref().to_vec());
        closest = updated;
    }
    centres
}

pub(crate) fn nearest_centroid(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn nearest_assignment<P: AsRef<[f64]>>(data: &[P], centroids: &[Vec<f64>]) -> Vec<usize> {
    data.iter()
        .map(|p| nearest_centroid(p.as_ref(), centroids).0)
        .collect()
}

fn inertia<P: AsRef<[f64]>>(data: &[P], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    data.iter()
        .zip(assignment)
        .map(|(p, &a)| sq_dist(p.as_ref(), &centroids[a]))
        .sum()
}

fn cluster_means<P: AsRef<[f64]>>(
    data: &[P],
    assignment: &[usize],
    k: usize,
    dim: usize,
) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in data.iter().zip(assignment) {
        counts[a] += 1;
        for (s, x) in sums[a].iter_mut().zip(p.as_ref()) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        let c = c as f64;
        s.iter_mut().for_each(|v| *v /= c);
    }
    sums
}

fn repair_empty_clusters<P: AsRef<[f64]>>(
    data: &[P],
    assignment: &mut [usize],
    centroids: &mut [Vec<f64>],
) {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in data.iter().enumerate() {
            let a = assignment[i];
            if counts[a] < 2 {
                continue;
            }
            let d = sq_dist(p.as_ref(), &centroids[a]);
            if far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("k <= n leaves a cluster with two members");
        counts[assignment[i]] -= 1;
        assignment[i] = empty;
        counts[empty] = 1;
        centroids[empty] = data[i].as_ref().to_vec();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_groups_on_a_line() {
        let data = pts(&[0.0, 1.0, 10.0, 11.0]);
        let fit = kmeans_fit(&data, &KMeansConfig::new(2).with_seed(3)).unwrap();
        assert_eq!(fit.partition().labels(), &[0, 0, 1, 1]);
        let mut c: Vec<f64> = fit.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.5, 10.5]);
        assert_eq!(fit.inertia(), 1.0);
    }

    #[test]
    fn k_equal_n_has_zero_inertia() {
        let data = pts(&[3.0, -1.0, 8.0, 2.5, 0.0]);
        let fit = kmeans_fit(&data, &KMeansConfig::new(5)).unwrap();
        assert_eq!(fit.inertia(), 0.0);
        assert_eq!(fit.partition().n_clusters(), 5);
    }

    #[test]
    fn k_one_gives_mean() {
        let data = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, -1.0]];
        let fit = kmeans_fit(&data, &KMeansConfig::new(1)).unwrap();
        assert_eq!(fit.centroids[0], vec![2.0, 1.0]);
        assert_eq!(fit.partition().labels(), &[0, 0, 0]);
    }

    #[test]
    fn duplicates_still_give_k_clusters() {
        let data = pts(&[1.0, 1.0, 1.0, 1.0, 5.0]);
        let p = kmeans(&data, &KMeansConfig::new(3)).unwrap();
        assert_eq!(p.n_clusters(), 3);
        assert_eq!(p.noise_count(), 0);
    }

    #[test]
    fn rejects_bad_k() {
        let data = pts(&[0.0, 1.0]);
        assert!(kmeans(&data, &KMeansConfig::new(3)).is_err());
        assert!(kmeans(&data, &KMeansConfig::new(0)).is_err());
    }
}
