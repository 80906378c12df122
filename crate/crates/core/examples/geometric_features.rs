//! Geometric features of one face: named ratios, pairwise distances and
//! orientations, plus skin smoothness and colour when an image is given.
//!
//! cargo run --example geometric_features

use facet::geom::{template_landmarks, GeomConfig, ImagePatch};

fn main() -> facet::Result<()> {
    let config = GeomConfig::default();
    let landmarks = template_landmarks();
    // flat skin tone with a faint diagonal texture
    let image = ImagePatch::from_fn(200, 220, |x, y| {
        let t = ((x + y) % 7) as u8;
        [200 + t, 160 + t, 140]
    })?;

    let without = config.assemble(&landmarks, None)?;
    let with = config.assemble(&landmarks, Some(&image))?;
    println!("features without image: {}", without.values.len());
    println!("features with image:    {}", with.values.len());
    for (name, value) in with.names.iter().zip(&with.values).take(5) {
        println!("  {name:<28} {value:.4}");
    }
    let skin = with.names.len() - 8;
    for (name, value) in with.names[skin..].iter().zip(&with.values[skin..]) {
        println!("  {name:<28} {value:.4}");
    }
    Ok(())
}
