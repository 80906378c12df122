//! Attribute-by-attribute Spearman heatmap of averaged ratings, written as
//! CSV and SVG.
//!
//! cargo run --example heatmap_svg -- [out.svg]

use facet::data::average_ratings;
use facet::eval::{attribute_heatmap, heatmap_similarity};
use facet::synth::{generate, SynthSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "heatmap.svg".into());
    let bundle = generate(&SynthSpec::toy())?;

    let mut human = Vec::new();
    let mut truth = Vec::new();
    for (a, attr) in bundle.attributes.iter().enumerate() {
        let avg = average_ratings(&bundle.ratings, attr)?;
        human.push((attr.clone(), bundle.faces.iter().map(|f| avg[f]).collect()));
        truth.push((attr.clone(), bundle.true_scores[a].clone()));
    }
    let h = attribute_heatmap(&human)?;
    let t = attribute_heatmap(&truth)?;
    print!("{}", h.to_csv());
    println!("similarity to noise-free heatmap: {:.4}", heatmap_similarity(&h, &t)?);

    std::fs::write(&out, h.to_svg("Averaged ratings"))?;
    println!("wrote {out}");
    Ok(())
}
