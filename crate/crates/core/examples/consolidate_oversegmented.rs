//! Splits four blobs into eight clusters, then repairs the split with each
//! consolidation method.

use docclust::cluster::{kmeans, KMeansConfig};
use docclust::consolidation::{
    adaptive_k, centroid_agglomerate, constraint_consolidate, penalty, prototype_seed, BootstrapConfig,
    ConstraintSet, Link, SeedConfig,
};
use docclust::metrics::adjusted_rand;
use docclust::synth::{generate_vectors, BlobSpec};
use docclust::tuning::AlgoConfig;

fn main() -> docclust::Result<()> {
    let seed = 11;
    let (x, y) = generate_vectors(&BlobSpec::new(4, 50, 32, 20.0, seed))?;
    let over = kmeans(&x, &KMeansConfig::new(8).with_seed(seed))?;
    println!("over-segmented: {} clusters, ARI {:.4}", over.n_clusters(), adjusted_rand(over.labels(), &y)?);

    let agg = centroid_agglomerate(&x, &over, seed)?;
    println!("agglomerate: m* = {}, ARI {:.4}", agg.m_star, adjusted_rand(agg.partition.labels(), &y)?);

    let base = AlgoConfig::Kmeans(KMeansConfig::new(8).with_seed(seed));
    let ak = adaptive_k(&x, &base, &BootstrapConfig::new(20, 0.8, seed))?;
    println!(
        "adaptive k: k_hat = {} (dispersion {:.3}, tau {}), ARI {:.4}",
        ak.k_hat,
        ak.k_dispersion,
        ak.tau,
        adjusted_rand(ak.partition.labels(), &y)?
    );

    // Must-links between items of the same blob that the split separated.
    let mut cons = ConstraintSet::default();
    for i in 0..x.len() {
        if let Some(j) = (i + 1..x.len()).find(|&j| y[i] == y[j] && over.labels()[i] != over.labels()[j]) {
            cons.must_links.push(Link::new(i, j, 1.0));
        }
    }
    let (merged, _) = constraint_consolidate(&over, &cons)?;
    println!(
        "constraints: penalty {} -> {}, {} clusters, ARI {:.4}",
        penalty(&over, &cons),
        penalty(&merged, &cons),
        merged.n_clusters(),
        adjusted_rand(merged.labels(), &y)?
    );

    let seeded = prototype_seed(&x, &over, &SeedConfig::new(4, 0.0), None)?;
    println!("prototype seeding: ARI {:.4}", adjusted_rand(seeded.labels(), &y)?);
    Ok(())
}
