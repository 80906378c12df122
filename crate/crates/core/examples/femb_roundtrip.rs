//! Writes an embedding matrix in the FEMB interchange format and reads it
//! back.
//!
//! cargo run --example femb_roundtrip

use facet::data::FaceId;
use facet::femb::EmbeddingMatrix;

fn main() -> facet::Result<()> {
    let faces = ["anna", "ben", "chloe"].map(FaceId::new).into_iter().collect::<facet::Result<Vec<_>>>()?;
    let rows = vec![vec![0.5, -1.0, 2.0, 0.0], vec![1.5, 0.25, -0.75, 3.0], vec![0.0, 0.0, 1.0, 1.0]];
    let m = EmbeddingMatrix::from_rows("conv5_2", faces, &rows)?;

    let path = std::env::temp_dir().join("facet_example.femb");
    m.save(&path)?;
    let back = EmbeddingMatrix::load(&path)?;
    println!(
        "layer {}  n {}  d {}  bytes {}",
        back.layer_name(),
        back.n(),
        back.d(),
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0)
    );
    for (face, i) in back.face_ids().iter().zip(0..) {
        println!("  {:<6} {:?}", face.as_str(), back.row(i));
    }
    println!("identical: {}", back == m);
    Ok(())
}
