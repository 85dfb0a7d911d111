//! Builds the page graph of a five-page document, smooths the pages over it
//! and pools them with attention.

use docclust::multipage::{aggregate_document, attention_weights, build_page_graph_from_similarity, smooth, PageGraphConfig};
use docclust::{DocVector, Strategy};

fn main() -> docclust::Result<()> {
    let mut sim = vec![vec![0.1; 5]; 5];
    for (i, row) in sim.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (i, j, c) in [(0, 2, 0.8), (1, 3, 0.6), (2, 4, 0.7)] {
        sim[i][j] = c;
        sim[j][i] = c;
    }
    let cfg = PageGraphConfig::default();
    let g = build_page_graph_from_similarity(&sim, &cfg)?;
    println!("degrees {:?}", g.degrees);
    for row in &g.normalized {
        println!("  {}", row.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "));
    }

    let pages: Vec<Vec<f64>> = (0..5).map(|p| vec![1.0, p as f64, (p * p) as f64 * 0.1]).collect();
    let h_hat = smooth(&pages, &g, cfg.smoothing_steps)?;
    println!("attention {:?}", attention_weights(&h_hat, cfg.temperature)?);

    let docs: Vec<DocVector> = pages
        .iter()
        .enumerate()
        .map(|(i, v)| DocVector::new(format!("report#{i}"), v.clone(), Strategy::Raw))
        .collect();
    println!("document vector {:?}", aggregate_document(&docs, &cfg)?.vector);
    Ok(())
}
