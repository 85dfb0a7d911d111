//! Unsupervised clustering of document embeddings.
//!
//! The crate takes per-page hidden-state matrices (stored as EMBX
//! containers), pools them into document vectors, clusters those vectors
//! with k-means, DBSCAN, HDBSCAN (+ k-NN noise reassignment) or BIRCH, tunes
//! density parameters by silhouette without labels, and scores the result
//! against ground truth when it exists. Around that core sit multi-page
//! aggregation over a page graph, post-clustering consolidation, and
//! confidence-weighted fusion with per-language covariance alignment.
//!
//! Every capability has a runnable program under `examples/`; the
//! `docclust` binary exposes the same stages as subcommands.

pub mod cli;
pub mod cluster;
pub mod consolidation;
pub mod embx;
mod error;
pub mod fusion;
pub mod metrics;
pub mod multipage;
pub mod projection;
pub mod synth;
pub mod tuning;
mod vector;

pub use cluster::{AlgorithmTag, Partition};
pub use embx::{read_dataset, write_dataset, Dataset, TokenEmbeddings};
pub use error::{Error, Result};
pub use metrics::EvalReport;
pub use vector::{DocVector, Strategy};

/// Cluster or class identifier. Negative values never name a cluster.
pub type Label = i64;

/// Label of points a density method leaves unassigned.
pub const NOISE: Label = -1;
