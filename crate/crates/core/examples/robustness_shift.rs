//! Tunes density clustering on clean blobs and reapplies the chosen
//! parameters to a covariate-shifted draw.

use docclust::metrics::adjusted_rand;
use docclust::synth::{generate_vectors, BlobSpec, Shift};
use docclust::tuning::{default_grid, grid_search};
use docclust::AlgorithmTag;

fn main() -> docclust::Result<()> {
    let spec = BlobSpec::new(4, 50, 32, 12.0, 2);
    let (clean, y) = generate_vectors(&spec)?;
    for tag in [AlgorithmTag::Dbscan, AlgorithmTag::Hdbscan] {
        let cfg = grid_search(&clean, &default_grid(tag, &clean, 2)?)?.best_config;
        print!("{tag:?}: clean ARI {:.3}", adjusted_rand(cfg.run(&clean)?.labels(), &y)?);
        for magnitude in [5.0, 10.0, 20.0] {
            let (x, ys) = generate_vectors(&BlobSpec {
                shift: Shift::Covariate { magnitude },
                ..spec
            })?;
            print!(", shift {magnitude}: {:.3}", adjusted_rand(cfg.run(&x)?.labels(), &ys)?);
        }
        println!();
    }
    Ok(())
}
