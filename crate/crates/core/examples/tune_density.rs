//! Label-free tuning: grid search by silhouette for DBSCAN and HDBSCAN, and
//! the oracle-k path for k-means and BIRCH.

use docclust::metrics::adjusted_rand;
use docclust::synth::{generate_vectors, BlobSpec};
use docclust::tuning::{default_grid, grid_search, oracle_partition};
use docclust::AlgorithmTag;

fn main() -> docclust::Result<()> {
    let (x, y) = generate_vectors(&BlobSpec::new(4, 50, 32, 20.0, 7))?;
    for tag in [AlgorithmTag::Dbscan, AlgorithmTag::Hdbscan] {
        let grid = default_grid(tag, &x, 7)?;
        let tuned = grid_search(&x, &grid)?;
        let p = tuned.best_config.run(&x)?;
        println!(
            "{tag:?}: {} trials, best silhouette {:.4}, {} clusters, {} noise, ARI {:.4}",
            tuned.trials.len(),
            tuned.best_score,
            p.n_clusters(),
            p.noise_count(),
            adjusted_rand(p.labels(), &y)?
        );
        println!("  chosen {}", serde_json::to_string(&tuned.best_config)?);
    }
    for tag in [AlgorithmTag::Kmeans, AlgorithmTag::Birch] {
        let p = oracle_partition(&x, tag, 4, None, 7)?;
        println!("{tag:?} with oracle k: ARI {:.4}", adjusted_rand(p.labels(), &y)?);
    }
    Ok(())
}
