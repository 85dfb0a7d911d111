//! Writes a labelled dataset as an EMBX container and reads it back.

use docclust::synth::{generate, BlobSpec};
use docclust::{read_dataset, write_dataset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut ds = generate(&BlobSpec::new(2, 5, 8, 10.0, 1))?;
    ds.items[0].ocr_confidence = Some(0.87);
    ds.items[1].language = Some("de".into());

    let dir = std::env::temp_dir().join("docclust-embx-example");
    write_dataset(&ds, &dir)?;
    let back = read_dataset(&dir)?;
    assert_eq!(back, ds);

    let manifest = std::fs::read_to_string(dir.join("manifest.json"))?;
    println!("{}", manifest.lines().take(12).collect::<Vec<_>>().join("\n"));
    println!("... {} items round-tripped through {}", back.len(), dir.display());
    Ok(())
}
