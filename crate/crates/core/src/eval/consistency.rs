//! Split-half agreement between raters (human consistency baseline).

use rayon::prelude::*;

use super::corr::pearson;
use crate::data::{Attribute, RatingsTable};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, fnv1a, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyResult {
    pub attribute: Attribute,
    pub mean_correlation: f64,
    pub per_repeat: Vec<f64>,
    pub seed: u64,
}

impl ConsistencyResult {
    /// Sample standard deviation over repeats (0 for a single repeat).
    pub fn stddev(&self) -> f64 {
        super::sample_stddev(&self.per_repeat)
    }
}

/// For every repeat, each face's raters are shuffled independently and cut
/// into groups of `ceil(r/2)` and `floor(r/2)`; the Pearson correlation of the
/// two per-face group means is recorded. Shuffles are seeded from
/// `(seed, repeat, face id)`, so the result does not depend on face order.
pub fn split_half_consistency(
    table: &RatingsTable,
    attribute: &Attribute,
    repeats: usize,
    seed: u64,
) -> Result<ConsistencyResult> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let mut cells: Vec<(u64, Vec<f64>)> = Vec::new();
    let mut short = Vec::new();
    for (face, ratings) in table.attribute_cells(attribute) {
        if ratings.len() < 2 {
            short.push(face.to_string());
            continue;
        }
        let mut sorted: Vec<_> = ratings.iter().collect();
        sorted.sort_by(|a, b| a.rater.cmp(&b.rater));
        cells.push((
            fnv1a(face.as_str().as_bytes()),
            sorted.iter().map(|r| r.score as f64).collect(),
        ));
    }
    if !short.is_empty() {
        return Err(Error::Coverage(short.join(", ")));
    }
    if cells.is_empty() {
        return Err(Error::NotFound(format!("attribute `{attribute}` has no ratings")));
    }

    let per_repeat = (0..repeats)
        .into_par_iter()
        .map(|rep| {
            let (mut a, mut b) = (Vec::with_capacity(cells.len()), Vec::with_capacity(cells.len()));
            for (tag, scores) in &cells {
                let mut s = scores.clone();
                SplitMix64::new(derive_seed(seed, &[rep as u64, *tag])).shuffle(&mut s);
                let half = s.len().div_ceil(2);
                a.push(s[..half].iter().sum::<f64>() / half as f64);
                b.push(s[half..].iter().sum::<f64>() / (s.len() - half) as f64);
            }
            pearson(&a, &b).map(|c| c.r)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ConsistencyResult {
        attribute: attribute.clone(),
        mean_correlation: per_repeat.iter().sum::<f64>() / repeats as f64,
        per_repeat,
        seed,
    })
}
