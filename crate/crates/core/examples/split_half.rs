//! Human consistency: correlate the mean ratings of two random rater halves.
//!
//! cargo run --example split_half

use facet::eval::split_half_consistency;
use facet::synth::{generate, SynthSpec};

fn main() -> facet::Result<()> {
    let bundle = generate(&SynthSpec::toy())?;
    for attr in &bundle.attributes {
        let r = split_half_consistency(&bundle.ratings, attr, 50, 1)?;
        println!("{:<12} mean {:.3}  sd {:.3}", attr.as_str(), r.mean_correlation, r.stddev());
    }
    Ok(())
}
