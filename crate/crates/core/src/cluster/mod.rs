//! The four clustering algorithms, the k-NN noise reassignment, and the
//! shared [`Partition`] output type. All distances are Euclidean; normalise
//! vectors beforehand for cosine geometry.

pub mod birch;
pub mod dbscan;
pub mod hdbscan;
pub mod kmeans;
pub mod knn;
mod partition;

pub use birch::{birch, birch_fit, cf_merge, BirchConfig, BirchFit, CfEntry};
pub use dbscan::{dbscan, DbscanConfig};
pub use hdbscan::{hdbscan, hdbscan_fit, mutual_reachability_mst, HdbscanConfig, HdbscanFit, MstEdge};
pub use kmeans::{kmeans, kmeans_fit, KMeansConfig, KMeansFit};
pub use knn::{hdbscan_knn, knn_classify, reassign_noise};
pub use partition::{AlgorithmTag, Partition};
