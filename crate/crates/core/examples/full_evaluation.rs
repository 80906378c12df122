//! Generates the synthetic toy bundle, runs the repeated evaluation and
//! writes the reports.
//!
//! cargo run --release --example full_evaluation -- [out_dir] [repeats]

use std::path::PathBuf;
use std::time::Instant;

use facet::pipeline::{evaluate_config, report, write_report, ExperimentConfig};
use facet::synth::{generate, write_bundle, SynthSpec};

fn main() -> facet::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "toy_run".into()));
    let repeats: usize = args.next().and_then(|r| r.parse().ok()).unwrap_or(10);

    let bundle = generate(&SynthSpec::toy())?;
    let paths = write_bundle(&bundle, &out.join("bundle"), repeats, 7)?;
    let config = ExperimentConfig::load(&paths.config, None)?;

    let start = Instant::now();
    let report = evaluate_config(&config)?;
    println!("evaluated {repeats} repeats in {:.2?}", start.elapsed());

    print!("{}", report::wide_csv(&report));
    for path in write_report(&report, &out.join("report"))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
