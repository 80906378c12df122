//! Trains one attribute predictor on a face split, saves it, reloads it and
//! scores the held-out faces.
//!
//! cargo run --example train_predict

use facet::data::average_ratings;
use facet::eval::pearson;
use facet::pipeline::{load_predictor, predict_faces, save_predictor, train_one, FaceSplit, SelectionConfig};
use facet::split::{make_split_of, SplitSpec};
use facet::synth::{generate, SynthSpec};

fn main() -> facet::Result<()> {
    let bundle = generate(&SynthSpec::toy())?;
    let attr = &bundle.attributes[0];
    let targets = average_ratings(&bundle.ratings, attr)?;

    let (train, validation, test) = make_split_of(&bundle.faces, &SplitSpec::new(7, 0))?;
    let split = FaceSplit { train, validation, test, master_seed: 7, repeat_index: 0 };
    let selection = SelectionConfig { pca_dims: vec![4, 8, 16, 32], ..SelectionConfig::default() };
    let predictor = train_one(&bundle.embeddings, &targets, attr, &selection, &split)?;
    println!(
        "{attr}: pca_dim {} lambda {:.3e}",
        predictor.selection.pca_dim, predictor.selection.lambda
    );

    let path = std::env::temp_dir().join("facet_example.fprd");
    save_predictor(&predictor, &path)?;
    let loaded = load_predictor(&path)?;

    let scores = predict_faces(&loaded, &bundle.embeddings, &split.test)?;
    let predicted: Vec<f64> = split.test.iter().map(|f| scores[f]).collect();
    let actual: Vec<f64> = split.test.iter().map(|f| targets[f]).collect();
    println!("test faces {}  pearson {:.3}", split.test.len(), pearson(&predicted, &actual)?.r);
    Ok(())
}
