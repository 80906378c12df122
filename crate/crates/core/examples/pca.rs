//! Principal components of correlated data and the variance they cover.
//!
//! cargo run --example pca

use facet::reduce::pca_fit;
use facet::rng::SplitMix64;
use nalgebra::DMatrix;

fn main() -> facet::Result<()> {
    let mut rng = SplitMix64::new(3);
    // 200 samples in 30 dimensions driven by 4 latent factors
    let latent = DMatrix::from_fn(200, 4, |_, _| rng.next_gaussian());
    let mixing = DMatrix::from_fn(4, 30, |_, _| rng.next_gaussian());
    let x = latent * mixing + DMatrix::from_fn(200, 30, |_, _| 0.1 * rng.next_gaussian());

    let model = pca_fit(&x, 10, false)?;
    for (i, r) in model.explained_variance_ratio.iter().enumerate() {
        println!("component {:>2}: {:.4}", i + 1, r);
    }
    println!("components for 95%: {:?}", model.components_for_variance(0.95));

    let z = model.transform(&x)?;
    let back = model.inverse_transform(&z)?;
    println!("reconstruction rms: {:.4}", ((&x - back).norm_squared() / x.len() as f64).sqrt());
    Ok(())
}
