//! Ranking source-layer units by their average contribution to one output.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AttributionRanking {
    /// `(unit index, mean contribution)`, descending by score, ties by index.
    pub unit_scores: Vec<(usize, f64)>,
    pub k_top: usize,
}

impl AttributionRanking {
    pub fn top(&self) -> &[(usize, f64)] {
        &self.unit_scores[..self.k_top]
    }
}

/// Scores unit `j` as `mean_i(activations[i, j]) * effective_weights[j]`, where
/// the effective weight already composes the unit's path through the PCA
/// projection and the regression weights.
pub fn attribution_top_k(
    activations: &DMatrix<f64>,
    effective_weights: &DVector<f64>,
    k: usize,
) -> Result<AttributionRanking> {
    let (n, u) = activations.shape();
    if effective_weights.len() != u {
        return Err(Error::Shape(format!(
            "{u} activation columns but {} weights",
            effective_weights.len()
        )));
    }
    if k == 0 || k > u {
        return Err(Error::Bound(format!("k = {k} must be in 1..={u}")));
    }
    if n == 0 {
        return Err(Error::Size("no activation rows".into()));
    }
    if activations.iter().chain(effective_weights.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite activations or weights".into()));
    }
    let mut unit_scores: Vec<(usize, f64)> = activations
        .column_iter()
        .zip(effective_weights.iter())
        .enumerate()
        .map(|(j, (col, w))| (j, col.mean() * w))
        .collect();
    // stable: equal scores keep ascending unit order
    unit_scores.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite scores"));
    Ok(AttributionRanking { unit_scores, k_top: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_built_three_units() {
        // column means (2, 1, 2); weights (0.5, -1, 2) -> scores (1, -1, 4)
        let act = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 3.0, 0.0, 1.0]);
        let w = DVector::from_vec(vec![0.5, -1.0, 2.0]);
        let r = attribution_top_k(&act, &w, 2).unwrap();
        assert_eq!(r.unit_scores, vec![(2, 4.0), (0, 1.0), (1, -1.0)]);
        assert_eq!(r.top(), &[(2, 4.0), (0, 1.0)]);
    }

    #[test]
    fn ones_follow_weight_order() {
        let act = DMatrix::from_element(3, 4, 1.0);
        let w = DVector::from_vec(vec![0.1, 0.4, -0.3, 0.2]);
        let r = attribution_top_k(&act, &w, 4).unwrap();
        let order: Vec<usize> = r.unit_scores.iter().map(|s| s.0).collect();
        assert_eq!(order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn zero_weights_give_zero_scores_in_index_order() {
        let act = DMatrix::from_row_slice(2, 3, &[5.0, -2.0, 1.0, 3.0, -7.0, 0.0]);
        let w = DVector::zeros(3);
        let r = attribution_top_k(&act, &w, 3).unwrap();
        assert_eq!(r.unit_scores.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(r.unit_scores.iter().all(|s| s.1 == 0.0));
    }

    #[test]
    fn k_bounds() {
        let act = DMatrix::from_element(2, 3, 1.0);
        let w = DVector::from_element(3, 1.0);
        assert!(matches!(attribution_top_k(&act, &w, 4), Err(Error::Bound(_))));
        assert!(matches!(attribution_top_k(&act, &w, 0), Err(Error::Bound(_))));
    }

    proptest! {
        #[test]
        fn positive_rescaling_keeps_order(
            vals in proptest::collection::vec(-5.0..5.0f64, 12),
            ws in proptest::collection::vec(-2.0..2.0f64, 4),
            c in 0.01..100.0f64,
        ) {
            let act = DMatrix::from_vec(3, 4, vals);
            let w = DVector::from_vec(ws);
            let a = attribution_top_k(&act, &w, 4).unwrap();
            let b = attribution_top_k(&(act * c), &w, 4).unwrap();
            let order = |r: &AttributionRanking| r.unit_scores.iter().map(|s| s.0).collect::<Vec<_>>();
            // rescaling can only reorder exact ties broken by rounding
            let distinct = a.unit_scores.windows(2).all(|p| (p[0].1 - p[1].1).abs() > 1e-9);
            if distinct {
                prop_assert_eq!(order(&a), order(&b));
            }
        }
    }
}
