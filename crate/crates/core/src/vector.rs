//! Document vectors and the small amount of dense vector arithmetic the
//! clustering code shares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a [`DocVector`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Mean,
    Hybrid,
    Cls,
    Pca,
    /// Page-graph aggregation of several page vectors.
    PageGraph,
    /// Confidence-weighted fusion of a text and a vision vector.
    Fused,
    /// Output of per-group covariance alignment.
    Aligned,
    /// Vector read as-is (synthetic data, pre-projected inputs).
    Raw,
}

/// Fixed-size embedding of one document (or page).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocVector {
    pub doc_id: String,
    pub vector: Vec<f64>,
    pub strategy: Strategy,
}

impl DocVector {
    pub fn new(doc_id: impl Into<String>, vector: Vec<f64>, strategy: Strategy) -> Self {
        Self {
            doc_id: doc_id.into(),
            vector,
            strategy,
        }
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

impl AsRef<[f64]> for DocVector {
    fn as_ref(&self) -> &[f64] {
        &self.vector
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either side has zero norm.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

pub(crate) fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroNorm);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Checks that every point has the same length and returns it.
pub(crate) fn common_dim<P: AsRef<[f64]>>(data: &[P]) -> Result<usize> {
    let Some(first) = data.first() else {
        return Ok(0);
    };
    let dim = first.as_ref().len();
    for p in data {
        if p.as_ref().len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: p.as_ref().len(),
            });
        }
    }
    Ok(dim)
}

/// Arithmetic mean of a set of points, summed in index order.
pub(crate) fn mean_of<'a, I>(points: I, dim: usize) -> Vec<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut acc = vec![0.0; dim];
    let mut count = 0usize;
    for p in points {
        for (a, x) in acc.iter_mut().zip(p) {
            *a += x;
        }
        count += 1;
    }
    if count > 0 {
        let inv = count as f64;
        acc.iter_mut().for_each(|a| *a /= inv);
    }
    acc
}

/// Full pairwise Euclidean distance matrix, row-major `n × n`.
pub(crate) fn distance_matrix<P: AsRef<[f64]>>(data: &[P]) -> Vec<f64> {
    let n = data.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist(data[i].as_ref(), data[j].as_ref());
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}
