//! k-nearest-neighbour vote and the HDBSCAN noise reassignment built on it.

use super::hdbscan::{hdbscan, HdbscanConfig};
use super::{AlgorithmTag, Partition};
use crate::error::{Error, Result};
use crate::vector::{common_dim, sq_dist};
use crate::{Label, NOISE};

/// Labels each query by majority vote of its `k` nearest training points
/// (Euclidean; equal distances resolved by training index). A tied vote goes
/// to the label whose closest voter is nearest.
pub fn knn_classify<P, Q>(train: &[P], train_labels: &[Label], query: &[Q], k: usize) -> Result<Vec<Label>>
where
    P: AsRef<[f64]>,
    Q: AsRef<[f64]>,
{
    if train.is_empty() {
        return Err(Error::InsufficientData("k-NN needs at least one training point".into()));
    }
    if train_labels.len() != train.len() {
        return Err(Error::LabelCount {
            labels: train_labels.len(),
            items: train.len(),
        });
    }
    if k == 0 || k > train.len() {
        return Err(Error::Config(format!(
            "k = {k} must be in 1..={}",
            train.len()
        )));
    }
    let dim = common_dim(train)?;
    for q in query {
        if q.as_ref().len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: q.as_ref().len(),
            });
        }
    }

    Ok(query
        .iter()
        .map(|q| {
            let mut order: Vec<(f64, usize)> = train
                .iter()
                .enumerate()
                .map(|(i, t)| (sq_dist(q.as_ref(), t.as_ref()), i))
                .collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            // (label, votes, rank of first voter); first-seen order is nearest-first.
            let mut tally: Vec<(Label, usize, usize)> = Vec::new();
            for (rank, &(_, i)) in order.iter().take(k).enumerate() {
                let label = train_labels[i];
                match tally.iter_mut().find(|t| t.0 == label) {
                    Some(t) => t.1 += 1,
                    None => tally.push((label, 1, rank)),
                }
            }
            tally
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
                .map(|t| t.0)
                .expect("k >= 1")
        })
        .collect())
}

/// Runs HDBSCAN, then assigns each noise point the k-NN vote of the
/// clustered points (`k = min(knn_k, clustered count)`). Clustered labels
/// are left untouched.
pub fn hdbscan_knn<P: AsRef<[f64]>>(data: &[P], cfg: &HdbscanConfig) -> Result<Partition> {
    let base = hdbscan(data, cfg)?;
    reassign_noise(data, &base, cfg.knn_k)
}

/// The reassignment step on its own, for any partition with noise.
pub fn reassign_noise<P: AsRef<[f64]>>(data: &[P], base: &Partition, knn_k: usize) -> Result<Partition> {
    if base.len() != data.len() {
        return Err(Error::LabelCount {
            labels: base.len(),
            items: data.len(),
        });
    }
    if base.n_clusters() == 0 {
        return Err(Error::AllNoise);
    }
    if base.noise_count() == 0 {
        return Ok(base.clone().with_algorithm(AlgorithmTag::HdbscanKnn));
    }
    let labels = base.labels();
    let (train, noise): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| labels[i] != NOISE);
    let train_pts: Vec<&[f64]> = train.iter().map(|&i| data[i].as_ref()).collect();
    let train_labels: Vec<Label> = train.iter().map(|&i| labels[i]).collect();
    let query: Vec<&[f64]> = noise.iter().map(|&i| data[i].as_ref()).collect();
    let k = knn_k.min(train.len());
    let predicted = knn_classify(&train_pts, &train_labels, &query, k)?;

    let mut out = labels.to_vec();
    for (&i, l) in noise.iter().zip(predicted) {
        out[i] = l;
    }
    Partition::try_new(out, base.n_clusters(), AlgorithmTag::HdbscanKnn)
}
