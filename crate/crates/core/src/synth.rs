//! Seeded synthetic embedding corpora: isotropic Gaussian blobs, uniform
//! outliers, and an optional low-rank covariate shift.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embx::{Dataset, TokenEmbeddings};
use crate::error::{Error, Result};
use crate::vector::{normalize, DocVector, Strategy};
use crate::{Label, NOISE};

/// Rank of the covariate-shift perturbation.
pub const SHIFT_RANK: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shift {
    #[default]
    None,
    /// Every point moves by `U·z`, `U` a fixed `d × 3` matrix of random unit
    /// directions and `z ~ N(0, magnitude²·I)` drawn per point.
    Covariate { magnitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    /// Typical distance between centroids, in within-cluster standard deviations.
    pub separation: f64,
    /// Outliers added, as a fraction of the clustered points.
    pub noise_frac: f64,
    #[serde(default)]
    pub shift: Shift,
    pub seed: u64,
}

impl BlobSpec {
    pub fn new(n_clusters: usize, points_per_cluster: usize, dim: usize, separation: f64, seed: u64) -> Self {
        Self {
            n_clusters,
            points_per_cluster,
            dim,
            separation,
            noise_frac: 0.0,
            shift: Shift::None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.points_per_cluster == 0 || self.dim == 0 {
            return Err(Error::Config(
                "n_clusters, points_per_cluster and dim must be positive".into(),
            ));
        }
        if !(self.separation.is_finite() && self.separation >= 0.0) {
            return Err(Error::Config("separation must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.noise_frac) {
            return Err(Error::Config("noise_frac must lie in [0, 1)".into()));
        }
        if let Shift::Covariate { magnitude } = self.shift {
            if !(magnitude.is_finite() && magnitude >= 0.0) {
                return Err(Error::Config("shift magnitude must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn noise_points(&self) -> usize {
        (self.noise_frac * (self.n_clusters * self.points_per_cluster) as f64).round() as usize
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        if let Ok(u) = normalize(&gaussian(rng, dim)) {
            return u;
        }
    }
}

/// Generated vectors with their ground-truth labels, in output order.
pub fn generate_vectors(spec: &BlobSpec) -> Result<(Vec<DocVector>, Vec<Label>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim;
    // Random unit vectors are nearly orthogonal in high dimension, so a
    // radius of separation/√2 puts centroid pairs about `separation` apart.
    let radius = spec.separation / std::f64::consts::SQRT_2;
    let centroids: Vec<Vec<f64>> = (0..spec.n_clusters)
        .map(|_| unit(&mut rng, d).into_iter().map(|x| x * radius).collect())
        .collect();

    let mut points: Vec<(Vec<f64>, Label)> = Vec::new();
    for (c, mu) in centroids.iter().enumerate() {
        for _ in 0..spec.points_per_cluster {
            let p = gaussian(&mut rng, d).iter().zip(mu).map(|(z, m)| z + m).collect();
            points.push((p, c as Label));
        }
    }
    let n_noise = spec.noise_points();
    if n_noise > 0 {
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (p, _) in &points {
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        for _ in 0..n_noise {
            let p = (0..d)
                .map(|k| if hi[k] > lo[k] { rng.random_range(lo[k]..hi[k]) } else { lo[k] })
                .collect();
            points.push((p, NOISE));
        }
    }
    if let Shift::Covariate { magnitude } = spec.shift {
        let basis: Vec<Vec<f64>> = (0..SHIFT_RANK).map(|_| unit(&mut rng, d)).collect();
        for (p, _) in points.iter_mut() {
            for u in &basis {
                let z: f64 = StandardNormal.sample(&mut rng);
                for (x, uk) in p.iter_mut().zip(u) {
                    *x += magnitude * z * uk;
                }
            }
        }
    }
    points.shuffle(&mut rng);
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(i, (p, l))| (DocVector::new(format!("doc-{i:05}"), p, Strategy::Raw), l))
        .unzip())
}

/// Generates a labelled single-row dataset.
pub fn generate(spec: &BlobSpec) -> Result<Dataset> {
    let (vectors, labels) = generate_vectors(spec)?;
    Dataset::from_vectors(&vectors, Some(labels))
}

/// Turns every single-row item into a `rows × dim` token matrix whose row
/// mean equals the original vector: `rows − 1` jitter rows are drawn and the
/// last row cancels their sum. The first `text_rows` rows form the text span.
pub fn expand_tokens(ds: &Dataset, rows: usize, text_rows: usize, jitter: f64, seed: u64) -> Result<Dataset> {
    if rows == 0 || text_rows > rows {
        return Err(Error::Config(format!(
            "need rows >= 1 and text_rows <= rows, got {rows} and {text_rows}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(ds.items.len());
    for item in &ds.items {
        let base: Vec<f64> = item.as_vector(Strategy::Raw)?.vector;
        let d = base.len();
        let mut offsets: Vec<Vec<f64>> = (0..rows - 1)
            .map(|_| gaussian(&mut rng, d).into_iter().map(|z| z * jitter).collect())
            .collect();
        let mut last = vec![0.0; d];
        for o in &offsets {
            for (l, x) in last.iter_mut().zip(o) {
                *l -= x;
            }
        }
        offsets.push(last);
        let matrix: Vec<Vec<f32>> = offsets
            .iter()
            .map(|o| o.iter().zip(&base).map(|(a, b)| (a + b) as f32).collect())
            .collect();
        let mut te = TokenEmbeddings::from_rows(item.doc_id.clone(), &matrix, text_rows)?;
        te.page_index = item.page_index;
        te.ocr_confidence = item.ocr_confidence;
        te.language = item.language.clone();
        items.push(te);
    }
    Dataset::new(items, ds.labels.clone(), ds.dim)
}
