//! Ranks embedding units by mean activation times their effective weight
//! through PCA and ridge.
//!
//! cargo run --example attribution

use facet::data::average_ratings;
use facet::eval::attribution_top_k;
use facet::pipeline::{train_one, FaceSplit, SelectionConfig};
use facet::split::{make_split_of, SplitSpec};
use facet::synth::{generate, SynthSpec};
use nalgebra::DMatrix;

fn main() -> facet::Result<()> {
    let bundle = generate(&SynthSpec::toy())?;
    let attr = &bundle.attributes[1];
    let targets = average_ratings(&bundle.ratings, attr)?;
    let (train, validation, test) = make_split_of(&bundle.faces, &SplitSpec::new(1, 0))?;
    let split = FaceSplit { train, validation, test, master_seed: 1, repeat_index: 0 };
    let selection = SelectionConfig { pca_dims: vec![4, 8, 16], ..SelectionConfig::default() };
    let predictor = train_one(&bundle.embeddings, &targets, attr, &selection, &split)?;

    // activations of the faces rated highest on this attribute
    let mut faces = bundle.faces.clone();
    faces.sort_by(|a, b| targets[b].total_cmp(&targets[a]));
    let rows: Vec<usize> = faces[..20].iter().filter_map(|f| bundle.embeddings.index_of(f)).collect();
    let acts: DMatrix<f64> = bundle.embeddings.gather(&rows);

    let ranking = attribution_top_k(&acts, &predictor.effective_weights(), 9)?;
    println!("top units for {attr}:");
    for (rank, (unit, score)) in ranking.top().iter().enumerate() {
        println!("  {:>2}. unit {unit:>3}  {score:+.4}", rank + 1);
    }
    Ok(())
}
