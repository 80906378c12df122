//! Distances and orientations between every pair of landmarks.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::data::{LandmarkSet, NUM_LANDMARKS};

pub const NUM_PAIRS: usize = NUM_LANDMARKS * (NUM_LANDMARKS - 1) / 2;

/// Landmark index pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..NUM_LANDMARKS).flat_map(|i| (i + 1..NUM_LANDMARKS).map(move |j| (i, j)))
}

pub fn pairwise_distances(landmarks: &LandmarkSet) -> Vec<f64> {
    let p = landmarks.points();
    pairs()
        .map(|(i, j)| (p[j][0] - p[i][0]).hypot(p[j][1] - p[i][1]))
        .collect()
}

/// Line orientation of each pair folded into `[0, pi)`.
///
/// Returns the orientations and the pair indices whose points coincide
/// (orientation reported as 0 for those).
pub fn pairwise_orientations(landmarks: &LandmarkSet) -> (Vec<f64>, Vec<usize>) {
    let p = landmarks.points();
    let mut coincident = Vec::new();
    let values = pairs()
        .enumerate()
        .map(|(k, (i, j))| {
            let dx = p[j][0] - p[i][0];
            let dy = p[j][1] - p[i][1];
            if dx == 0.0 && dy == 0.0 {
                coincident.push(k);
                0.0
            } else {
                fold_orientation(dy, dx)
            }
        })
        .collect();
    (values, coincident)
}

fn fold_orientation(dy: f64, dx: f64) -> f64 {
    if dx == 0.0 {
        return FRAC_PI_2;
    }
    let mut t = dy.atan2(dx);
    if t < 0.0 {
        t += PI;
    }
    if t >= PI {
        t -= PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn set_with(first: [f64; 2], second: [f64; 2]) -> LandmarkSet {
        let mut pts = vec![[0.0, 0.0]; NUM_LANDMARKS];
        for (k, p) in pts.iter_mut().enumerate() {
            *p = [10.0 * k as f64, (k * k) as f64];
        }
        pts[0] = first;
        pts[1] = second;
        LandmarkSet::new(pts).unwrap()
    }

    #[test]
    fn pair_count() {
        assert_eq!(NUM_PAIRS, 2278);
        assert_eq!(pairs().count(), 2278);
        assert_eq!(pairs().next(), Some((0, 1)));
        assert_eq!(pairs().last(), Some((66, 67)));
    }

    #[test]
    fn identical_points_give_zero_distances() {
        let s = LandmarkSet::new(vec![[3.0, 4.0]; NUM_LANDMARKS]).unwrap();
        assert!(pairwise_distances(&s).iter().all(|&d| d == 0.0));
        let (o, flagged) = pairwise_orientations(&s);
        assert!(o.iter().all(|&v| v == 0.0));
        assert_eq!(flagged.len(), NUM_PAIRS);
    }

    #[test]
    fn scaling_doubles_distances() {
        let s = set_with([1.0, 2.0], [5.0, -1.0]);
        let s2 = s.map(|[x, y]| [2.0 * x, 2.0 * y]).unwrap();
        for (a, b) in pairwise_distances(&s).iter().zip(pairwise_distances(&s2)) {
            assert_eq!(2.0 * a, b);
        }
    }

    #[test]
    fn orientation_cases() {
        let horiz = pairwise_orientations(&set_with([0.0, 0.0], [-3.0, 0.0])).0[0];
        assert_eq!(horiz, 0.0);
        let vert = pairwise_orientations(&set_with([0.0, 5.0], [0.0, 1.0])).0[0];
        assert_eq!(vert, FRAC_PI_2);
        let diag = pairwise_orientations(&set_with([1.0, 1.0], [3.0, 3.0])).0[0];
        assert!((diag - FRAC_PI_4).abs() < 1e-15);
        let anti = pairwise_orientations(&set_with([3.0, 3.0], [1.0, 1.0])).0[0];
        assert!((anti - FRAC_PI_4).abs() < 1e-15);
    }
}
