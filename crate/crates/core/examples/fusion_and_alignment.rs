//! Fuses text and vision views by OCR confidence, then aligns a shifted
//! language group onto a reference group.

use docclust::fusion::{coral_align, fit_group_stats, fuse, FusionConfig, FusionMode};
use docclust::synth::{generate_vectors, BlobSpec};
use docclust::{DocVector, Strategy};

fn main() -> docclust::Result<()> {
    let text = DocVector::new("d", vec![1.0, 0.0, 2.0], Strategy::Mean);
    let vision = DocVector::new("d", vec![0.0, 3.0, 0.0], Strategy::Mean);
    for conf in [Some(0.9), Some(0.2), None] {
        let v = fuse(&text, &vision, conf, &FusionConfig::default())?;
        println!("convex, confidence {conf:?}: {:?}", v.vector);
    }
    let concat = FusionConfig {
        mode: FusionMode::Concat,
        ..FusionConfig::default()
    };
    println!("concat: {:?}", fuse(&text, &vision, Some(0.5), &concat)?.vector);

    let (x, _) = generate_vectors(&BlobSpec::new(2, 200, 4, 5.0, 9))?;
    let data: Vec<Vec<f64>> = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if i % 2 == 0 {
                v.vector.clone()
            } else {
                v.vector.iter().map(|a| 3.0 * a + 10.0).collect()
            }
        })
        .collect();
    let groups: Vec<&str> = (0..data.len()).map(|i| if i % 2 == 0 { "en" } else { "fr" }).collect();
    let stats = fit_group_stats(&data, &groups)?;
    let (en, fr) = (&stats[0], &stats[1]);
    let members: Vec<&Vec<f64>> = data.iter().skip(1).step_by(2).collect();
    let aligned = coral_align(&members, fr, en, fr.default_ridge())?;
    let after = fit_group_stats(&aligned, &vec!["fr"; aligned.len()])?;
    println!("fr trace {:.2} -> {:.2}, en trace {:.2}", fr.trace(), after[0].trace(), en.trace());
    Ok(())
}
