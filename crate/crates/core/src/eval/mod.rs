//! Evaluation statistics: correlations, human split-half consistency,
//! attribute heatmaps and unit attribution.

pub mod attribution;
pub mod consistency;
pub mod corr;
pub mod heatmap;

pub use attribution::{attribution_top_k, AttributionRanking};
pub use consistency::{split_half_consistency, ConsistencyResult};
pub use corr::{average_ranks, pearson, spearman, Correlation};
pub use heatmap::{attribute_heatmap, heatmap_similarity, AttributeHeatmap};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 when fewer than 2 values.
pub fn sample_stddev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
