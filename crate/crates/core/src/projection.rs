//! Pooling a `L × D` hidden-state matrix down to one document vector.
//!
//! * [`mean_pool`]: average of every row.
//! * [`hybrid_pool`]: text-row mean concatenated with the mean of image rows
//!   after max-pooling each image row over non-overlapping windows of width
//!   `k` along the feature axis. Output length is `D + D / k`.
//! * [`cls_pool`]: the first row.
//! * [`pca_reduce`]: centred projection of a batch of vectors onto its top
//!   principal axes.
//!
//! Vectors are not normalised here.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embx::TokenEmbeddings;
use crate::error::{Error, Result};
use crate::vector::{common_dim, DocVector, Strategy};

/// Max-pool window for the image half of [`hybrid_pool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub kernel: usize,
}

impl HybridConfig {
    /// `k = 8` when it divides `D`, otherwise the largest divisor of `D` not above 8.
    pub fn default_for(dim: usize) -> Self {
        let kernel = (1..=8usize.min(dim.max(1)))
            .rev()
            .find(|k| dim % k == 0)
            .unwrap_or(1);
        Self { kernel }
    }

    pub fn pooled_width(&self, dim: usize) -> usize {
        dim / self.kernel
    }
}

fn row_mean(te: &TokenEmbeddings, rows: std::ops::Range<usize>) -> Vec<f64> {
    let count = rows.len() as f64;
    let mut acc = vec![0.0; te.cols];
    for r in rows {
        for (a, &x) in acc.iter_mut().zip(te.row(r)) {
            *a += f64::from(x);
        }
    }
    acc.iter_mut().for_each(|a| *a /= count);
    acc
}

pub fn mean_pool(te: &TokenEmbeddings) -> DocVector {
    DocVector::new(te.doc_id.clone(), row_mean(te, 0..te.rows), Strategy::Mean)
}

pub fn cls_pool(te: &TokenEmbeddings) -> DocVector {
    DocVector::new(
        te.doc_id.clone(),
        te.row(0).iter().map(|&x| f64::from(x)).collect(),
        Strategy::Cls,
    )
}

pub fn hybrid_pool(te: &TokenEmbeddings, cfg: &HybridConfig) -> Result<DocVector> {
    let k = cfg.kernel;
    if k == 0 || te.cols % k != 0 {
        return Err(Error::Config(format!(
            "max-pool kernel {k} does not divide hidden size {}",
            te.cols
        )));
    }
    if te.text_rows == 0 {
        return Err(Error::ModalityMissing { modality: "text" });
    }
    if te.image_rows() == 0 {
        return Err(Error::ModalityMissing { modality: "image" });
    }

    let mut v = row_mean(te, 0..te.text_rows);
    let width = cfg.pooled_width(te.cols);
    let mut pooled = vec![0.0; width];
    for r in te.text_rows..te.rows {
        for (slot, window) in pooled.iter_mut().zip(te.row(r).chunks_exact(k)) {
            let m = window.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            *slot += f64::from(m);
        }
    }
    let count = te.image_rows() as f64;
    v.extend(pooled.into_iter().map(|s| s / count));
    Ok(DocVector::new(te.doc_id.clone(), v, Strategy::Hybrid))
}

/// Projects `vectors` onto their top `target_dim` principal axes.
///
/// The centred data matrix goes through a full SVD. Axes are ordered by
/// decreasing singular value and each axis is signed so that its
/// largest-magnitude loading is positive. A singular value counts as
/// non-zero above `max(n, d) · ε · s_max`.
pub fn pca_reduce(vectors: &[DocVector], target_dim: usize) -> Result<Vec<DocVector>> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("PCA needs at least 2 vectors, got {n}")));
    }
    let d = common_dim(vectors)?;
    if target_dim == 0 || target_dim > n.min(d) {
        return Err(Error::Config(format!(
            "target_dim {target_dim} must be in 1..={}",
            n.min(d)
        )));
    }
    let mean = crate::vector::mean_of(vectors.iter().map(|v| v.vector.as_slice()), d);
    let centred = DMatrix::from_fn(n, d, |i, j| vectors[i].vector[j] - mean[j]);
    let svd = centred.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });
    let s_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = s_max * n.max(d) as f64 * f64::EPSILON;
    let available = svd
        .singular_values
        .iter()
        .filter(|&&s| s > cutoff && s > 0.0)
        .count();
    if available < target_dim {
        return Err(Error::RankDeficient {
            available,
            requested: target_dim,
        });
    }

    let mut axes = DMatrix::zeros(d, target_dim);
    for (c, &idx) in order.iter().take(target_dim).enumerate() {
        let mut axis: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = axis
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map_or(0.0, |(_, x)| x);
        if pivot < 0.0 {
            axis.iter_mut().for_each(|x| *x = -*x);
        }
        for (r, x) in axis.into_iter().enumerate() {
            axes[(r, c)] = x;
        }
    }
    let projected = centred * axes;
    Ok(vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            DocVector::new(
                v.doc_id.clone(),
                projected.row(i).iter().copied().collect(),
                Strategy::Pca,
            )
        })
        .collect())
}
