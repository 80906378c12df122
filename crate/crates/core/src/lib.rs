pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod femb;
pub mod geom;
pub mod pipeline;
pub mod reduce;
pub mod ridge;
pub mod rng;
pub mod split;
pub mod synth;

pub use error::{Error, Result};
