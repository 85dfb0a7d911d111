//! Runs the four clustering families on well separated blobs and scores each.

use docclust::cluster::{birch, dbscan, hdbscan, hdbscan_knn, kmeans, BirchConfig, DbscanConfig, HdbscanConfig, KMeansConfig};
use docclust::metrics::evaluate;
use docclust::synth::{generate_vectors, BlobSpec};
use docclust::{EvalReport, Partition};

fn main() -> docclust::Result<()> {
    let mut spec = BlobSpec::new(4, 50, 16, 20.0, 3);
    spec.noise_frac = 0.05;
    let (x, y) = generate_vectors(&spec)?;

    let runs: Vec<(&str, Partition)> = vec![
        ("kmeans", kmeans(&x, &KMeansConfig::new(4).with_seed(3))?),
        ("dbscan", dbscan(&x, &DbscanConfig { eps: 7.0, min_pts: 5 })?),
        ("hdbscan", hdbscan(&x, &HdbscanConfig::new(10, 5))?),
        ("hdbscan-knn", hdbscan_knn(&x, &HdbscanConfig::new(10, 5))?),
        ("birch", birch(&x, &BirchConfig::new(4.0).with_global_k(4))?),
    ];
    println!("algorithm,{}", EvalReport::CSV_HEADER);
    for (name, p) in runs {
        println!("{name},{}", evaluate(&x, &p, Some(&y))?.csv_row());
    }
    Ok(())
}
