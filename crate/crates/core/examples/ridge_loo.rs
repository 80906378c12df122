//! Ridge regression with the penalty chosen by exact leave-one-out error.
//!
//! cargo run --example ridge_loo

use facet::ridge::{loo_curve, ridge_fit, select_lambda, LambdaGrid};
use facet::rng::SplitMix64;
use nalgebra::{DMatrix, DVector};

fn main() -> facet::Result<()> {
    let mut rng = SplitMix64::new(11);
    let (n, k) = (60, 12);
    let z = DMatrix::from_fn(n, k, |_, _| rng.next_gaussian());
    let w = DVector::from_fn(k, |j, _| if j < 3 { 1.0 } else { 0.0 });
    let y = &z * &w + DVector::from_fn(n, |_, _| 0.5 * rng.next_gaussian());

    let grid = LambdaGrid::log_spaced(1e-3, 1e3, 13)?;
    let curve = loo_curve(&z, &y, &grid)?;
    for (lambda, mse) in curve.lambdas.iter().zip(&curve.mse) {
        println!("lambda {lambda:>9.3e}  loo mse {mse:.4}");
    }
    let best = select_lambda(&curve)?;
    let model = ridge_fit(&z, &y, best)?;
    println!("selected lambda {best:.3e}");
    println!("first weights {:.3?}", &model.weights.as_slice()[..4]);
    Ok(())
}
