use serde::{Deserialize, Serialize};

use super::MergeMap;
use crate::cluster::{kmeans_fit, KMeansConfig, Partition};
use crate::error::{Error, Result};
use crate::vector::{common_dim, mean_of, sq_dist};
use crate::NOISE;

/// Seeded EM restarts per component count; the best likelihood is kept.
pub const EM_RESTARTS: u64 = 5;
const EM_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agglomeration {
    pub partition: Partition,
    pub merge_map: MergeMap,
    /// BIC for m = 1..=C, index 0 holding m = 1.
    pub bic: Vec<f64>,
    pub m_star: usize,
    /// Lower bound applied to the shared variance.
    pub variance_floor: f64,
}

struct Mixture {
    log_likelihood: f64,
    /// Most responsible component per centroid.
    assignment: Vec<usize>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// EM for a mixture of `m` spherical Gaussians sharing one variance,
/// initialised from a seeded k-means run.
fn fit_mixture(points: &[Vec<f64>], m: usize, floor: f64, seed: u64) -> Result<Mixture> {
    let c = points.len();
    let d = points[0].len() as f64;
    let init = kmeans_fit(points, &KMeansConfig::new(m).with_seed(seed))?;
    let mut var = (init.inertia() / (c as f64 * d)).max(floor);
    let mut means = init.centroids;
    let mut weights: Vec<f64> = (0..m)
        .map(|j| init.assignment.iter().filter(|&&a| a == j).count() as f64 / c as f64)
        .collect();
    let mut resp = vec![vec![0.0; m]; c];
    let mut prev = f64::NEG_INFINITY;
    let mut ll = f64::NEG_INFINITY;
    for _ in 0..EM_MAX_ITER {
        // E step.
        ll = 0.0;
        let norm = -0.5 * d * (2.0 * std::f64::consts::PI * var).ln();
        for (x, r) in points.iter().zip(resp.iter_mut()) {
            let logs: Vec<f64> = (0..m)
                .map(|j| weights[j].ln() + norm - sq_dist(x, &means[j]) / (2.0 * var))
                .collect();
            let total = log_sum_exp(&logs);
            ll += total;
            for (rj, lj) in r.iter_mut().zip(&logs) {
                *rj = (lj - total).exp();
            }
        }
        if ll - prev <= 1e-10 * ll.abs().max(1.0) {
            break;
        }
        prev = ll;
        // M step.
        let mut scatter = 0.0;
        for j in 0..m {
            let nj: f64 = resp.iter().map(|r| r[j]).sum();
            weights[j] = nj / c as f64;
            if nj > 0.0 {
                let mut mu = vec![0.0; points[0].len()];
                for (x, r) in points.iter().zip(&resp) {
                    for (a, xi) in mu.iter_mut().zip(x) {
                        *a += r[j] * xi;
                    }
                }
                mu.iter_mut().for_each(|a| *a /= nj);
                means[j] = mu;
            }
        }
        for (x, r) in points.iter().zip(&resp) {
            for j in 0..m {
                scatter += r[j] * sq_dist(x, &means[j]);
            }
        }
        var = (scatter / (c as f64 * d)).max(floor);
    }
    let assignment = resp
        .iter()
        .map(|r| {
            (0..m)
                .max_by(|&a, &b| r[a].total_cmp(&r[b]).then(b.cmp(&a)))
                .expect("m >= 1")
        })
        .collect();
    Ok(Mixture {
        log_likelihood: ll,
        assignment,
    })
}

/// Fits mixtures with 1..=C components to the C cluster centroids and merges
/// clusters that share a component of the BIC-optimal mixture.
///
/// The shared variance is floored at the pooled within-cluster variance of
/// the data, so that splitting coincident or near-coincident centroids into
/// separate components cannot drive the likelihood to infinity.
pub fn centroid_agglomerate<P: AsRef<[f64]>>(data: &[P], part: &Partition, seed: u64) -> Result<Agglomeration> {
    if data.len() != part.len() {
        return Err(Error::LabelCount {
            labels: part.len(),
            items: data.len(),
        });
    }
    let dim = common_dim(data)?;
    let c = part.n_clusters();
    let members = part.members();
    let centroids: Vec<Vec<f64>> = members
        .iter()
        .map(|m| mean_of(m.iter().map(|&i| data[i].as_ref()), dim))
        .collect();
    if c < 2 {
        return Ok(Agglomeration {
            partition: part.clone(),
            merge_map: MergeMap::identity(c),
            bic: Vec::new(),
            m_star: c,
            variance_floor: 0.0,
        });
    }

    let clustered = part.len() - part.noise_count();
    let within: f64 = part
        .labels()
        .iter()
        .zip(data)
        .filter(|(&l, _)| l != NOISE)
        .map(|(&l, x)| sq_dist(x.as_ref(), &centroids[l as usize]))
        .sum();
    let grand = mean_of(centroids.iter().map(Vec::as_slice), dim);
    let spread: f64 = centroids.iter().map(|x| sq_dist(x, &grand)).sum::<f64>() / (c * dim) as f64;
    let mut floor = within / (clustered * dim) as f64;
    if !(floor > 0.0) {
        floor = 1e-9 * spread;
    }
    if !(floor > 0.0) {
        floor = 1e-12;
    }

    let d = dim as f64;
    let mut bic = Vec::with_capacity(c);
    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    for m in 1..=c {
        let mut fit: Option<Mixture> = None;
        for r in 0..EM_RESTARTS {
            let s = seed.wrapping_mul(31).wrapping_add(r);
            let cand = fit_mixture(&centroids, m, floor, s)?;
            if fit.as_ref().is_none_or(|f| cand.log_likelihood > f.log_likelihood) {
                fit = Some(cand);
            }
        }
        let fit = fit.expect("at least one restart");
        let params = m as f64 * d + m as f64;
        let score = -2.0 * fit.log_likelihood + params * (c as f64).ln();
        bic.push(score);
        if best.as_ref().is_none_or(|(b, _, _)| score < *b) {
            best = Some((score, fit.assignment, m));
        }
    }
    let (_, groups, m_star) = best.expect("c >= 2");
    let merge_map = MergeMap::from_groups(&groups);
    Ok(Agglomeration {
        partition: merge_map.apply(part)?,
        merge_map,
        bic,
        m_star,
        variance_floor: floor,
    })
}
