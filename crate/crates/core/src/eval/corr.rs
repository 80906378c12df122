//! Pearson and Spearman correlation.

use crate::error::{Error, Result};

/// Correlation coefficient plus a flag set when exactly one input was
/// constant (the coefficient is then reported as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Size(format!("correlation needs at least 2 points, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("correlation input contains non-finite values".into()));
    }
    match (is_constant(x), is_constant(y)) {
        (true, true) => return Err(Error::Degenerate("both vectors are constant".into())),
        (true, false) | (false, true) => return Ok(Correlation { r: 0.0, degenerate: true }),
        _ => {}
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(Correlation { r: 0.0, degenerate: true });
    }
    Ok(Correlation {
        r: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Ranks starting at 1; tied values share their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Data("correlation input contains non-finite values".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0, 5.0];
        assert!((pearson(&x, &x).unwrap().r - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &neg).unwrap().r + 1.0).abs() < 1e-15);
        // 3 / sqrt(2 * 42/9)
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap().r;
        assert!((r - 3.0 / (2.0f64 * 42.0 / 9.0).sqrt()).abs() < 1e-15);
        assert!((r - 0.981_980_506_061_965_7).abs() < 1e-12);
    }

    #[test]
    fn pearson_degenerate_inputs() {
        let c = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c, Correlation { r: 0.0, degenerate: true });
        assert!(matches!(pearson(&[2.0, 2.0], &[3.0, 3.0]), Err(Error::Degenerate(_))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0]), Err(Error::Shape(_))));
        assert!(pearson(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn spearman_cases() {
        let x = [0.3, 1.0, 2.5, 7.0];
        let cubed: Vec<f64> = x.iter().map(|v: &f64| v.powi(3) + 2.0).collect();
        assert!((spearman(&x, &cubed).unwrap().r - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap().r + 0.5).abs() < 1e-15);
        // ranks (1.5, 1.5, 3) vs (1, 2, 3): 1.5 / sqrt(1.5 * 2)
        let r = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap().r;
        assert!((r - 1.5 / 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    proptest! {
        #[test]
        fn bounded_and_affine_invariant(
            xs in proptest::collection::vec(-100.0..100.0f64, 3..40),
            a in 0.1..10.0f64, b in -10.0..10.0f64, seed in any::<u64>()
        ) {
            let mut rng = crate::rng::SplitMix64::new(seed);
            let ys: Vec<f64> = xs.iter().map(|x| x + 50.0 * rng.next_gaussian()).collect();
            if let Ok(c) = pearson(&xs, &ys) {
                prop_assert!((-1.0..=1.0).contains(&c.r));
                let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
                let c2 = pearson(&scaled, &ys).unwrap();
                prop_assert!((c.r - c2.r).abs() < 1e-9);
            }
            if let Ok(s) = spearman(&xs, &ys) {
                prop_assert!((-1.0..=1.0).contains(&s.r));
                let mono: Vec<f64> = xs.iter().map(|x| (x / 50.0).exp()).collect();
                let s2 = spearman(&mono, &ys).unwrap();
                prop_assert!((s.r - s2.r).abs() < 1e-12);
            }
        }
    }
}
