//! Multi-page documents: a page graph with sequential and semantic edges,
//! normalised propagation over it, and cosine attention pooling into one
//! unit-norm document vector.

use serde::{Deserialize, Serialize};

use crate::embx::{Dataset, TokenEmbeddings};
use crate::error::{Error, Result};
use crate::vector::{common_dim, cosine, mean_of, normalize, DocVector, Strategy};
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageGraphConfig {
    /// Weight of edges between consecutive pages.
    pub lambda_seq: f64,
    /// Scale of semantic edges between non-adjacent pages.
    pub lambda_sim: f64,
    /// Non-adjacent neighbours each page selects.
    pub sem_k: usize,
    pub smoothing_steps: usize,
    /// Attention temperature.
    pub temperature: f64,
}

impl Default for PageGraphConfig {
    fn default() -> Self {
        Self {
            lambda_seq: 1.0,
            lambda_sim: 0.5,
            sem_k: 1,
            smoothing_steps: 1,
            temperature: 0.1,
        }
    }
}

impl PageGraphConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x.is_finite() && x > 0.0;
        if !pos(self.lambda_seq) || !pos(self.lambda_sim) || !pos(self.temperature) {
            return Err(Error::Config(
                "lambda_seq, lambda_sim and temperature must be positive".into(),
            ));
        }
        if self.sem_k == 0 {
            return Err(Error::Config("sem_k must be positive".into()));
        }
        if !(1..=2).contains(&self.smoothing_steps) {
            return Err(Error::Config(format!(
                "smoothing_steps must be 1 or 2, got {}",
                self.smoothing_steps
            )));
        }
        Ok(())
    }
}

/// Weighted adjacency `A`, degrees `d`, and `Ã = D^{-1/2} A D^{-1/2}`.
/// Matrices are stored as rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageGraph {
    pub adjacency: Vec<Vec<f64>>,
    pub degrees: Vec<f64>,
    pub normalized: Vec<Vec<f64>>,
}

impl PageGraph {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }
}

/// Builds the page graph of one document from its page vectors.
pub fn build_page_graph(pages: &[DocVector], cfg: &PageGraphConfig) -> Result<PageGraph> {
    common_dim(pages)?;
    let n = pages.len();
    let mut sim = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let c = cosine(&pages[i].vector, &pages[j].vector);
            sim[i][j] = c;
            sim[j][i] = c;
        }
    }
    build_page_graph_from_similarity(&sim, cfg)
}

/// Builds the page graph from a precomputed symmetric cosine matrix.
pub fn build_page_graph_from_similarity(sim: &[Vec<f64>], cfg: &PageGraphConfig) -> Result<PageGraph> {
    cfg.validate()?;
    let n = sim.len();
    if n == 0 {
        return Err(Error::InsufficientData("a document needs at least one page".into()));
    }
    if let Some(row) = sim.iter().find(|r| r.len() != n) {
        return Err(Error::DimMismatch {
            expected: n,
            found: row.len(),
        });
    }

    let mut selected = vec![vec![false; n]; n];
    for (i, row) in sim.iter().enumerate() {
        let mut candidates: Vec<usize> = (0..n).filter(|&j| i.abs_diff(j) > 1).collect();
        candidates.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &j in candidates.iter().take(cfg.sem_k) {
            selected[i][j] = true;
        }
    }

    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
        if i + 1 < n {
            a[i][i + 1] = cfg.lambda_seq;
            a[i + 1][i] = cfg.lambda_seq;
        }
        for j in (i + 2)..n {
            if selected[i][j] || selected[j][i] {
                let w = cfg.lambda_sim * sim[i][j].max(0.0);
                if w > 0.0 {
                    a[i][j] = w;
                    a[j][i] = w;
                }
            }
        }
    }

    let degrees: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut normalized = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = a[i][j] * inv_sqrt[i] * inv_sqrt[j];
            normalized[i][j] = v;
            normalized[j][i] = v;
        }
    }
    Ok(PageGraph {
        adjacency: a,
        degrees,
        normalized,
    })
}

/// `ÃH`, applied `steps` times (1 or 2).
pub fn smooth(h: &[Vec<f64>], g: &PageGraph, steps: usize) -> Result<Vec<Vec<f64>>> {
    if !(1..=2).contains(&steps) {
        return Err(Error::Config(format!("smoothing steps must be 1 or 2, got {steps}")));
    }
    if h.len() != g.len() {
        return Err(Error::DimMismatch {
            expected: g.len(),
            found: h.len(),
        });
    }
    let d = common_dim(h)?;
    let mut cur = h.to_vec();
    for _ in 0..steps {
        cur = g
            .normalized
            .iter()
            .map(|row| {
                let mut out = vec![0.0; d];
                for (w, hj) in row.iter().zip(&cur) {
                    if *w != 0.0 {
                        for (o, x) in out.iter_mut().zip(hj) {
                            *o += w * x;
                        }
                    }
                }
                out
            })
            .collect();
    }
    Ok(cur)
}

/// Softmax over `cos(ĥᵢ, h̄) / τ`. A zero-norm row scores 0.
pub fn attention_weights(h_hat: &[Vec<f64>], temperature: f64) -> Result<Vec<f64>> {
    if h_hat.is_empty() {
        return Err(Error::InsufficientData("no pages to pool".into()));
    }
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Config("temperature must be positive".into()));
    }
    let d = common_dim(h_hat)?;
    let mean = mean_of(h_hat.iter().map(Vec::as_slice), d);
    let scores: Vec<f64> = h_hat.iter().map(|h| cosine(h, &mean) / temperature).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Attention-weighted sum of the smoothed pages, L2-normalised.
pub fn attention_pool(doc_id: &str, h_hat: &[Vec<f64>], cfg: &PageGraphConfig) -> Result<DocVector> {
    let alpha = attention_weights(h_hat, cfg.temperature)?;
    let d = h_hat[0].len();
    let mut pooled = vec![0.0; d];
    for (a, h) in alpha.iter().zip(h_hat) {
        for (p, x) in pooled.iter_mut().zip(h) {
            *p += a * x;
        }
    }
    Ok(DocVector::new(doc_id, normalize(&pooled)?, Strategy::PageGraph))
}

/// Graph construction, smoothing and attention pooling for one document.
/// Pages must be in reading order.
pub fn aggregate_document(pages: &[DocVector], cfg: &PageGraphConfig) -> Result<DocVector> {
    let first = pages
        .first()
        .ok_or_else(|| Error::InsufficientData("a document needs at least one page".into()))?;
    let g = build_page_graph(pages, cfg)?;
    let h: Vec<Vec<f64>> = pages.iter().map(|p| p.vector.clone()).collect();
    let h_hat = smooth(&h, &g, cfg.smoothing_steps)?;
    attention_pool(&first.doc_id, &h_hat, cfg)
}

/// Groups a page-level dataset by `doc_id` (documents in order of first
/// appearance, pages by `page_index`) and emits one single-row item per
/// document. Multi-row items are mean-pooled first. A document's label is
/// its pages' common label.
pub fn aggregate_dataset(ds: &Dataset, cfg: &PageGraphConfig) -> Result<Dataset> {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: std::collections::HashMap<&str, Vec<usize>> = std::collections::HashMap::new();
    for (i, item) in ds.items.iter().enumerate() {
        let entry = groups.entry(&item.doc_id).or_default();
        if entry.is_empty() {
            order.push(&item.doc_id);
        }
        entry.push(i);
    }
    let mut items = Vec::with_capacity(order.len());
    let mut labels: Option<Vec<Label>> = ds.labels.as_ref().map(|_| Vec::new());
    for doc in order {
        let mut idx = groups.remove(doc).unwrap_or_default();
        idx.sort_by_key(|&i| ds.items[i].page_index);
        let pages: Vec<DocVector> = idx
            .iter()
            .map(|&i| crate::projection::mean_pool(&ds.items[i]))
            .collect();
        let v = aggregate_document(&pages, cfg)?;
        let first = &ds.items[idx[0]];
        let confs: Vec<f64> = idx.iter().filter_map(|&i| ds.items[i].ocr_confidence).collect();
        let mut item = TokenEmbeddings::from_vector(&v);
        item.language = first.language.clone();
        item.ocr_confidence = (!confs.is_empty()).then(|| confs.iter().sum::<f64>() / confs.len() as f64);
        items.push(item);
        if let (Some(out), Some(all)) = (labels.as_mut(), ds.labels.as_ref()) {
            let l = all[idx[0]];
            if idx.iter().any(|&i| all[i] != l) {
                return Err(Error::Config(format!("pages of document {doc} carry different labels")));
            }
            out.push(l);
        }
    }
    Dataset::new(items, labels, ds.dim)
}
