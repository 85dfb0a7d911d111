//! Pools a small token matrix three ways, then reduces a batch with PCA.

use docclust::projection::{cls_pool, hybrid_pool, mean_pool, pca_reduce, HybridConfig};
use docclust::synth::{expand_tokens, generate, BlobSpec};
use docclust::TokenEmbeddings;

fn main() -> docclust::Result<()> {
    let rows = vec![
        vec![0.5, 1.0, -1.0, 2.0],
        vec![3.0, 0.0, 1.0, -2.0],
        vec![-1.0, 4.0, 2.0, 2.0],
    ];
    let te = TokenEmbeddings::from_rows("page", &rows, 1)?;
    println!("mean   {:?}", mean_pool(&te).vector);
    println!("cls    {:?}", cls_pool(&te).vector);
    println!("hybrid {:?}", hybrid_pool(&te, &HybridConfig { kernel: 2 })?.vector);

    let ds = generate(&BlobSpec::new(3, 10, 16, 12.0, 4))?;
    let tokens = expand_tokens(&ds, 6, 2, 0.3, 4)?;
    let cfg = HybridConfig::default_for(tokens.dim);
    let pooled = tokens
        .items
        .iter()
        .map(|t| hybrid_pool(t, &cfg))
        .collect::<docclust::Result<Vec<_>>>()?;
    let reduced = pca_reduce(&pooled, 3)?;
    println!(
        "{} items pooled to {} dims with k = {}, reduced to {}",
        pooled.len(),
        pooled[0].dim(),
        cfg.kernel,
        reduced[0].dim()
    );
    Ok(())
}
