//! Confidence-weighted fusion of a text view and a vision view, and
//! per-group (per-language) mean/covariance alignment.
//!
//! Alignment maps a batch with statistics `(μ_s, C_s)` onto `(μ_r, C_r)`:
//! `x' = (x − μ_s)(C_s + rI)^{-1/2}(C_r + rI)^{1/2} + μ_r`, square roots taken
//! through a symmetric eigendecomposition. Nothing here runs automatically;
//! callers decide when a corpus needs it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{common_dim, mean_of, normalize, DocVector, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// `w·t + (1−w)·g`, renormalised.
    Convex,
    /// `[w·t ; (1−w)·g]`.
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub mode: FusionMode,
    /// Lowest weight the text view can receive.
    pub weight_floor: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            mode: FusionMode::Convex,
            weight_floor: 0.0,
        }
    }
}

/// Text weight for an OCR confidence. Missing confidence counts as 0.5.
pub fn text_weight(ocr_conf: Option<f64>, weight_floor: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&weight_floor) {
        return Err(Error::Config(format!("weight_floor {weight_floor} outside [0, 1]")));
    }
    let c = ocr_conf.unwrap_or(0.5);
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Config(format!("ocr confidence {c} outside [0, 1]")));
    }
    Ok(c.max(weight_floor))
}

/// Fuses the two views of one document. Both are L2-normalised first.
pub fn fuse(text: &DocVector, vision: &DocVector, ocr_conf: Option<f64>, cfg: &FusionConfig) -> Result<DocVector> {
    let w = text_weight(ocr_conf, cfg.weight_floor)?;
    let t = normalize(&text.vector)?;
    let g = normalize(&vision.vector)?;
    let vector = match cfg.mode {
        FusionMode::Convex => {
            if t.len() != g.len() {
                return Err(Error::DimMismatch {
                    expected: t.len(),
                    found: g.len(),
                });
            }
            let mixed: Vec<f64> = t.iter().zip(&g).map(|(a, b)| w * a + (1.0 - w) * b).collect();
            normalize(&mixed)?
        }
        FusionMode::Concat => t
            .iter()
            .map(|a| w * a)
            .chain(g.iter().map(|b| (1.0 - w) * b))
            .collect(),
    };
    Ok(DocVector::new(text.doc_id.clone(), vector, Strategy::Fused))
}

/// Mean and covariance of one group of vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group_key: String,
    pub count: usize,
    pub mean: Vec<f64>,
    /// Row-major `d × d`, denominator `count − 1`.
    pub covariance: Vec<f64>,
    /// Fewer than two members: the covariance is zero by convention.
    pub degenerate: bool,
}

impl GroupStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.covariance[i * d + i]).sum()
    }

    /// `1e-3 · trace(C) / d`, or `1e-9` when the covariance is zero.
    pub fn default_ridge(&self) -> f64 {
        let r = 1e-3 * self.trace() / self.dim().max(1) as f64;
        if r > 0.0 {
            r
        } else {
            1e-9
        }
    }

    fn cov_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_row_slice(d, d, &self.covariance)
    }

    pub fn from_vectors<P: AsRef<[f64]>>(group_key: impl Into<String>, vectors: &[P]) -> Result<Self> {
        let d = common_dim(vectors)?;
        let n = vectors.len();
        if n == 0 {
            return Err(Error::InsufficientData("group has no members".into()));
        }
        let mean = mean_of(vectors.iter().map(|v| v.as_ref()), d);
        let mut cov = vec![0.0; d * d];
        if n >= 2 {
            for v in vectors {
                let c: Vec<f64> = v.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect();
                for i in 0..d {
                    for j in i..d {
                        cov[i * d + j] += c[i] * c[j];
                    }
                }
            }
            let denom = (n - 1) as f64;
            for i in 0..d {
                for j in i..d {
                    let v = cov[i * d + j] / denom;
                    cov[i * d + j] = v;
                    cov[j * d + i] = v;
                }
            }
        }
        Ok(Self {
            group_key: group_key.into(),
            count: n,
            mean,
            covariance: cov,
            degenerate: n < 2,
        })
    }
}

/// Per-group statistics, groups in order of first appearance.
pub fn fit_group_stats<P: AsRef<[f64]>, K: AsRef<str>>(vectors: &[P], groups: &[K]) -> Result<Vec<GroupStats>> {
    if vectors.len() != groups.len() {
        return Err(Error::LabelCount {
            labels: groups.len(),
            items: vectors.len(),
        });
    }
    common_dim(vectors)?;
    let mut keys: Vec<&str> = Vec::new();
    for g in groups {
        if !keys.contains(&g.as_ref()) {
            keys.push(g.as_ref());
        }
    }
    keys.iter()
        .map(|k| {
            let members: Vec<&[f64]> = vectors
                .iter()
                .zip(groups)
                .filter(|(_, g)| g.as_ref() == *k)
                .map(|(v, _)| v.as_ref())
                .collect();
            GroupStats::from_vectors(*k, &members)
        })
        .collect()
}

/// `f(C + ridge·I)` for a symmetric `C`, with `f` applied to eigenvalues.
fn spectral_fn(c: &DMatrix<f64>, ridge: f64, f: impl Fn(f64) -> f64) -> Result<DMatrix<f64>> {
    let d = c.nrows();
    let m = c + DMatrix::identity(d, d) * ridge;
    let eig = SymmetricEigen::new(m);
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
            max_eigenvalue: max,
        });
    }
    let diag = DVector::from_iterator(d, eig.eigenvalues.iter().map(|&l| f(l)));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&diag) * v.transpose())
}

/// Moves `source` from statistics `src` onto `reference`.
pub fn coral_align<P: AsRef<[f64]>>(
    source: &[P],
    src: &GroupStats,
    reference: &GroupStats,
    ridge: f64,
) -> Result<Vec<Vec<f64>>> {
    let d = src.dim();
    if reference.dim() != d {
        return Err(Error::DimMismatch {
            expected: d,
            found: reference.dim(),
        });
    }
    if let Some(x) = source.iter().find(|x| x.as_ref().len() != d) {
        return Err(Error::DimMismatch {
            expected: d,
            found: x.as_ref().len(),
        });
    }
    if !(ridge.is_finite() && ridge > 0.0) {
        return Err(Error::Config(format!("ridge must be positive, got {ridge}")));
    }
    let whiten = spectral_fn(&src.cov_matrix(), ridge, |l| 1.0 / l.sqrt())?;
    let color = spectral_fn(&reference.cov_matrix(), ridge, f64::sqrt)?;
    let transport = whiten * color;
    Ok(source
        .iter()
        .map(|x| {
            let centred = DVector::from_iterator(d, x.as_ref().iter().zip(&src.mean).map(|(a, m)| a - m));
            let moved = transport.tr_mul(&centred);
            moved.iter().zip(&reference.mean).map(|(a, m)| a + m).collect()
        })
        .collect())
}
