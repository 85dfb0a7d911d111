//! EMBX: a directory holding `manifest.json` and `embeddings.bin`.
//!
//! The blob is every item's matrix as row-major little-endian `f32`,
//! concatenated in manifest order. The manifest records shape, text span,
//! byte offset and the optional per-item metadata. Optional fields are always
//! written, as `null` when absent, and a reader rejects a manifest that omits
//! them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::vector::{DocVector, Strategy};
use crate::Label;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "embeddings.bin";
pub const FORMAT_VERSION: u32 = 1;

/// Last-hidden-state matrix of one document page, `rows × cols`, with the
/// first `text_rows` rows being text tokens and the rest image patches.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    pub doc_id: String,
    pub page_index: u32,
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows * cols` values.
    pub data: Vec<f32>,
    pub text_rows: usize,
    pub ocr_confidence: Option<f64>,
    pub language: Option<String>,
}

impl TokenEmbeddings {
    /// Builds an item from row vectors. `text_rows` rows are text, the rest image.
    pub fn from_rows(
        doc_id: impl Into<String>,
        rows: &[Vec<f32>],
        text_rows: usize,
    ) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        let te = Self {
            doc_id: doc_id.into(),
            page_index: 0,
            rows: rows.len(),
            cols,
            data,
            text_rows,
            ocr_confidence: None,
            language: None,
        };
        te.validate(0)?;
        Ok(te)
    }

    /// Single-row item holding a document vector, narrowed to `f32`.
    pub fn from_vector(v: &DocVector) -> Self {
        Self {
            doc_id: v.doc_id.clone(),
            page_index: 0,
            rows: 1,
            cols: v.dim(),
            data: v.vector.iter().map(|&x| x as f32).collect(),
            text_rows: 1,
            ocr_confidence: None,
            language: None,
        }
    }

    /// Same metadata as `self`, matrix replaced by the single row `v`.
    pub fn with_vector(&self, v: &DocVector) -> Self {
        Self {
            doc_id: v.doc_id.clone(),
            page_index: self.page_index,
            ocr_confidence: self.ocr_confidence,
            language: self.language.clone(),
            ..Self::from_vector(v)
        }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn image_rows(&self) -> usize {
        self.rows - self.text_rows
    }

    /// Reads a single-row item back as a vector.
    pub fn as_vector(&self, strategy: Strategy) -> Result<DocVector> {
        if self.rows != 1 {
            return Err(Error::Config(format!(
                "item {} has {} rows; project it to a single vector first",
                self.doc_id, self.rows
            )));
        }
        Ok(DocVector::new(
            self.doc_id.clone(),
            self.data.iter().map(|&x| f64::from(x)).collect(),
            strategy,
        ))
    }

    fn validate(&self, item: usize) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::SpanViolation {
                item,
                reason: "matrix has no rows".into(),
            });
        }
        if self.text_rows > self.rows {
            return Err(Error::SpanViolation {
                item,
                reason: format!("text_rows {} exceeds rows {}", self.text_rows, self.rows),
            });
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimMismatch {
                expected: self.rows * self.cols,
                found: self.data.len(),
            });
        }
        if let Some(pos) = self.data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                item,
                row: pos / self.cols.max(1),
                col: pos % self.cols.max(1),
            });
        }
        if let Some(c) = self.ocr_confidence {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::MalformedManifest(format!(
                    "item {item}: ocr_confidence {c} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Ordered collection of items sharing one column count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub items: Vec<TokenEmbeddings>,
    pub labels: Option<Vec<Label>>,
    pub dim: usize,
}

impl Dataset {
    pub fn new(items: Vec<TokenEmbeddings>, labels: Option<Vec<Label>>, dim: usize) -> Result<Self> {
        let ds = Self { items, labels, dim };
        ds.validate()?;
        Ok(ds)
    }

    pub fn from_vectors(vectors: &[DocVector], labels: Option<Vec<Label>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, DocVector::dim);
        Self::new(
            vectors.iter().map(TokenEmbeddings::from_vector).collect(),
            labels,
            dim,
        )
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Every item as a vector; fails if any item still has several rows.
    pub fn vectors(&self) -> Result<Vec<DocVector>> {
        self.items.iter().map(|t| t.as_vector(Strategy::Raw)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(labels) = &self.labels {
            if labels.len() != self.items.len() {
                return Err(Error::LabelCount {
                    labels: labels.len(),
                    items: self.items.len(),
                });
            }
        }
        for (i, item) in self.items.iter().enumerate() {
            if item.cols != self.dim {
                return Err(Error::DimMismatch {
                    expected: self.dim,
                    found: item.cols,
                });
            }
            item.validate(i)?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    dim: usize,
    item_count: usize,
    blob_sha256: String,
    items: Vec<ManifestItem>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestItem {
    doc_id: String,
    page_index: u32,
    rows: usize,
    cols: usize,
    text_rows: usize,
    offset_bytes: u64,
    // `deserialize_with` makes serde require the key even though the value may be null.
    #[serde(deserialize_with = "Option::deserialize")]
    label: Option<Label>,
    #[serde(deserialize_with = "Option::deserialize")]
    ocr_confidence: Option<f64>,
    #[serde(deserialize_with = "Option::deserialize")]
    language: Option<String>,
}

fn encode_blob(ds: &Dataset) -> Vec<u8> {
    let total: usize = ds.items.iter().map(|t| t.data.len()).sum();
    let mut blob = Vec::with_capacity(total * 4);
    for item in &ds.items {
        for x in &item.data {
            blob.extend_from_slice(&x.to_le_bytes());
        }
    }
    blob
}

/// Writes `ds` as an EMBX directory, creating it if needed. The dataset is
/// validated before anything touches the filesystem.
pub fn write_dataset(ds: &Dataset, destination: &Path) -> Result<()> {
    ds.validate()?;
    let blob = encode_blob(ds);
    let mut offset = 0u64;
    let items = ds
        .items
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let entry = ManifestItem {
                doc_id: t.doc_id.clone(),
                page_index: t.page_index,
                rows: t.rows,
                cols: t.cols,
                text_rows: t.text_rows,
                offset_bytes: offset,
                label: ds.labels.as_ref().map(|l| l[i]),
                ocr_confidence: t.ocr_confidence,
                language: t.language.clone(),
            };
            offset += (t.data.len() * 4) as u64;
            entry
        })
        .collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        dim: ds.dim,
        item_count: ds.items.len(),
        blob_sha256: hex::encode(Sha256::digest(&blob)),
        items,
    };
    fs::create_dir_all(destination).map_err(|e| Error::io(destination, e))?;
    let blob_path = destination.join(BLOB_FILE);
    fs::write(&blob_path, &blob).map_err(|e| Error::io(&blob_path, e))?;
    let manifest_path = destination.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(())
}

/// Reads and fully validates an EMBX directory.
pub fn read_dataset(source: &Path) -> Result<Dataset> {
    let manifest_path = source.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::MalformedManifest(e.to_string()))?;
    let blob_path = source.join(BLOB_FILE);
    let blob = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    decode(manifest, &blob)
}

fn decode(manifest: Manifest, blob: &[u8]) -> Result<Dataset> {
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::MalformedManifest(format!(
            "unsupported format_version {}",
            manifest.format_version
        )));
    }
    if manifest.item_count != manifest.items.len() {
        return Err(Error::MalformedManifest(format!(
            "item_count {} but {} items listed",
            manifest.item_count,
            manifest.items.len()
        )));
    }
    let mut expected_offset = 0u64;
    for (i, it) in manifest.items.iter().enumerate() {
        if it.cols != manifest.dim {
            return Err(Error::MalformedManifest(format!(
                "item {i} has {} columns, dataset dim is {}",
                it.cols, manifest.dim
            )));
        }
        if it.rows == 0 {
            return Err(Error::SpanViolation {
                item: i,
                reason: "matrix has no rows".into(),
            });
        }
        if it.text_rows > it.rows {
            return Err(Error::SpanViolation {
                item: i,
                reason: format!("text_rows {} exceeds rows {}", it.text_rows, it.rows),
            });
        }
        if it.offset_bytes != expected_offset {
            return Err(Error::MalformedManifest(format!(
                "item {i} offset {} but previous items end at {expected_offset}",
                it.offset_bytes
            )));
        }
        expected_offset += (it.rows * it.cols * 4) as u64;
    }
    if blob.len() as u64 != expected_offset {
        return Err(Error::BlobLength {
            expected: expected_offset,
            actual: blob.len() as u64,
        });
    }
    let actual_sha = hex::encode(Sha256::digest(blob));
    if !actual_sha.eq_ignore_ascii_case(&manifest.blob_sha256) {
        return Err(Error::Checksum {
            expected: manifest.blob_sha256,
            actual: actual_sha,
        });
    }

    let label_count = manifest.items.iter().filter(|it| it.label.is_some()).count();
    if label_count != 0 && label_count != manifest.items.len() {
        return Err(Error::MalformedManifest(format!(
            "{label_count} of {} items carry a label; labels must be all present or all null",
            manifest.items.len()
        )));
    }
    let labels = (label_count > 0).then(|| {
        manifest
            .items
            .iter()
            .map(|it| it.label.unwrap_or_default())
            .collect::<Vec<_>>()
    });

    let mut items = Vec::with_capacity(manifest.items.len());
    for it in manifest.items {
        let start = it.offset_bytes as usize;
        let end = start + it.rows * it.cols * 4;
        let data = blob[start..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        items.push(TokenEmbeddings {
            doc_id: it.doc_id,
            page_index: it.page_index,
            rows: it.rows,
            cols: it.cols,
            data,
            text_rows: it.text_rows,
            ocr_confidence: it.ocr_confidence,
            language: it.language,
        });
    }
    Dataset::new(items, labels, manifest.dim)
}
