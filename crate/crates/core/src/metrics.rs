//! External (ARI, NMI, homogeneity, completeness) and internal (silhouette)
//! validity scores, plus the [`EvalReport`] that bundles them.
//!
//! In the external scores a noise label is an ordinary label, so all noise
//! points together count as one cluster. Entropies use natural logarithms.
//! NMI normalises by the arithmetic mean of the two entropies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::Partition;
use crate::error::{Error, Result};
use crate::vector::{common_dim, dist, sq_dist};
use crate::{Label, NOISE};

struct Contingency {
    n: usize,
    /// Marginal counts of the first labelling.
    rows: Vec<usize>,
    /// Marginal counts of the second labelling.
    cols: Vec<usize>,
    /// Non-zero cells as (row, col, count), sorted.
    cells: Vec<(usize, usize, usize)>,
}

impl Contingency {
    fn new(a: &[Label], b: &[Label]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::LabelCount {
                labels: a.len(),
                items: b.len(),
            });
        }
        let index = |labels: &[Label]| {
            let mut ids: BTreeMap<Label, usize> = BTreeMap::new();
            for &l in labels {
                let next = ids.len();
                ids.entry(l).or_insert(next);
            }
            ids
        };
        let (ia, ib) = (index(a), index(b));
        let mut rows = vec![0; ia.len()];
        let mut cols = vec![0; ib.len()];
        let mut cells: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (x, y) in a.iter().zip(b) {
            let (r, c) = (ia[x], ib[y]);
            rows[r] += 1;
            cols[c] += 1;
            *cells.entry((r, c)).or_insert(0) += 1;
        }
        Ok(Self {
            n: a.len(),
            rows,
            cols,
            cells: cells.into_iter().map(|((r, c), v)| (r, c, v)).collect(),
        })
    }

    fn entropy(counts: &[usize], n: usize) -> f64 {
        let n = n as f64;
        -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    }

    fn mutual_information(&self) -> f64 {
        let n = self.n as f64;
        self.cells
            .iter()
            .map(|&(r, c, v)| {
                let v = v as f64;
                (v / n) * ((n * v) / (self.rows[r] as f64 * self.cols[c] as f64)).ln()
            })
            .sum::<f64>()
            .max(0.0)
    }

    /// H(first | second).
    fn conditional_entropy_rows_given_cols(&self) -> f64 {
        let n = self.n as f64;
        -self
            .cells
            .iter()
            .map(|&(_, c, v)| {
                let v = v as f64;
                (v / n) * (v / self.cols[c] as f64).ln()
            })
            .sum::<f64>()
    }
}

fn comb2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. Needs at least two items.
pub fn adjusted_rand(pred: &[Label], truth: &[Label]) -> Result<f64> {
    let t = Contingency::new(pred, truth)?;
    if t.n < 2 {
        return Err(Error::InsufficientData("ARI needs at least two items".into()));
    }
    let index: f64 = t.cells.iter().map(|&(_, _, v)| comb2(v)).sum();
    let sum_a: f64 = t.rows.iter().map(|&c| comb2(c)).sum();
    let sum_b: f64 = t.cols.iter().map(|&c| comb2(c)).sum();
    let expected = sum_a * sum_b / comb2(t.n);
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    // Both labellings trivial (all one cluster, or all singletons) and equal.
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Normalised mutual information, arithmetic-mean normalisation.
pub fn normalized_mi(pred: &[Label], truth: &[Label]) -> Result<f64> {
    let t = Contingency::new(pred, truth)?;
    if t.n == 0 {
        return Err(Error::InsufficientData("NMI needs at least one item".into()));
    }
    let ha = Contingency::entropy(&t.rows, t.n);
    let hb = Contingency::entropy(&t.cols, t.n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    Ok((t.mutual_information() / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Homogeneity and completeness of `pred` against `truth`.
pub fn homogeneity_completeness(pred: &[Label], truth: &[Label]) -> Result<(f64, f64)> {
    let t = Contingency::new(truth, pred)?;
    if t.n == 0 {
        return Err(Error::InsufficientData("needs at least one item".into()));
    }
    let h_truth = Contingency::entropy(&t.rows, t.n);
    let h_pred = Contingency::entropy(&t.cols, t.n);
    let hs = if h_truth == 0.0 {
        1.0
    } else {
        1.0 - t.conditional_entropy_rows_given_cols() / h_truth
    };
    let swapped = Contingency::new(pred, truth)?;
    let cs = if h_pred == 0.0 {
        1.0
    } else {
        1.0 - swapped.conditional_entropy_rows_given_cols() / h_pred
    };
    Ok((hs.clamp(0.0, 1.0), cs.clamp(0.0, 1.0)))
}

/// Mean silhouette over non-noise points. Singleton clusters score 0.
/// `None` when fewer than two clusters exist.
pub fn silhouette<P: AsRef<[f64]>>(data: &[P], part: &Partition) -> Result<Option<f64>> {
    if data.len() != part.len() {
        return Err(Error::LabelCount {
            labels: part.len(),
            items: data.len(),
        });
    }
    common_dim(data)?;
    if part.n_clusters() < 2 {
        return Ok(None);
    }
    let members = part.members();
    let labels = part.labels();
    let scored: Vec<usize> = (0..data.len()).filter(|&i| labels[i] != NOISE).collect();
    if scored.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for &i in &scored {
        let own = labels[i] as usize;
        if members[own].len() < 2 {
            continue;
        }
        let mut a = 0.0;
        let mut b = f64::INFINITY;
        for (c, m) in members.iter().enumerate() {
            let sum: f64 = m.iter().map(|&j| dist(data[i].as_ref(), data[j].as_ref())).sum();
            if c == own {
                a = sum / (m.len() - 1) as f64;
            } else {
                b = b.min(sum / m.len() as f64);
            }
        }
        let scale = a.max(b);
        if scale > 0.0 {
            total += (b - a) / scale;
        }
    }
    Ok(Some(total / scored.len() as f64))
}

/// Silhouette measured against cluster centroids: `a` is the distance to the
/// own centroid, `b` the distance to the nearest other centroid. Noise is
/// skipped; `None` with fewer than two clusters.
pub fn centroid_silhouette<P: AsRef<[f64]>>(data: &[P], part: &Partition) -> Result<Option<f64>> {
    if data.len() != part.len() {
        return Err(Error::LabelCount {
            labels: part.len(),
            items: data.len(),
        });
    }
    let dim = common_dim(data)?;
    if part.n_clusters() < 2 {
        return Ok(None);
    }
    let centroids: Vec<Vec<f64>> = part
        .members()
        .iter()
        .map(|m| crate::vector::mean_of(m.iter().map(|&i| data[i].as_ref()), dim))
        .collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for (p, &l) in data.iter().zip(part.labels()) {
        if l == NOISE {
            continue;
        }
        count += 1;
        let a = sq_dist(p.as_ref(), &centroids[l as usize]).sqrt();
        let b = centroids
            .iter()
            .enumerate()
            .filter(|&(c, _)| c != l as usize)
            .map(|(_, c)| sq_dist(p.as_ref(), c).sqrt())
            .fold(f64::INFINITY, f64::min);
        let scale = a.max(b);
        if scale > 0.0 {
            total += (b - a) / scale;
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}

/// Scores of one clustering run, in the column order ARI, NMI, HS, CS, SS,
/// PC, %noise. External scores are `None` without ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
    pub hs: Option<f64>,
    pub cs: Option<f64>,
    pub ss: Option<f64>,
    pub pc: usize,
    pub noise_pct: f64,
}

impl EvalReport {
    pub const CSV_HEADER: &'static str = "ARI,NMI,HS,CS,SS,PC,%Noise";

    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.4}"));
        format!(
            "{},{},{},{},{},{},{:.2}",
            f(self.ari),
            f(self.nmi),
            f(self.hs),
            f(self.cs),
            f(self.ss),
            self.pc,
            self.noise_pct
        )
    }
}

pub fn evaluate<P: AsRef<[f64]>>(data: &[P], pred: &Partition, truth: Option<&[Label]>) -> Result<EvalReport> {
    if data.len() != pred.len() {
        return Err(Error::LabelCount {
            labels: pred.len(),
            items: data.len(),
        });
    }
    let n = pred.len();
    let ss = if n >= 2 { silhouette(data, pred)? } else { None };
    let noise_pct = if n == 0 {
        0.0
    } else {
        100.0 * pred.noise_count() as f64 / n as f64
    };
    let (ari, nmi, hs, cs) = match truth {
        Some(t) => {
            if t.len() != n {
                return Err(Error::LabelCount {
                    labels: t.len(),
                    items: n,
                });
            }
            let (hs, cs) = homogeneity_completeness(pred.labels(), t)?;
            (
                Some(adjusted_rand(pred.labels(), t)?),
                Some(normalized_mi(pred.labels(), t)?),
                Some(hs),
                Some(cs),
            )
        }
        None => (None, None, None, None),
    };
    Ok(EvalReport {
        ari,
        nmi,
        hs,
        cs,
        ss,
        pc: pred.n_clusters(),
        noise_pct,
    })
}
