//! Principal component analysis via thin SVD of the centred training data.
//!
//! The SVD is a Householder QR followed by one-sided Jacobi rotations on the
//! square triangular factor. Centred data always has an exactly zero singular
//! value once `d >= n`, and Jacobi stays accurate in that case.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// Per-column divisor applied after centring, when fitted with
    /// standardisation.
    pub scale: Option<DVector<f64>>,
    /// `k x d`, rows are orthonormal components in descending variance order.
    pub basis: DMatrix<f64>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Set when the data had fewer non-degenerate directions than requested.
    pub rank_deficient: bool,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.basis.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.basis.ncols()
    }

    /// Keeps the leading `k` components.
    pub fn truncate(&self, k: usize) -> Result<PcaModel> {
        if k == 0 || k > self.n_components() {
            return Err(Error::Bound(format!(
                "cannot keep {k} of {} components",
                self.n_components()
            )));
        }
        Ok(PcaModel {
            mean: self.mean.clone(),
            scale: self.scale.clone(),
            basis: self.basis.rows(0, k).into_owned(),
            explained_variance: self.explained_variance[..k].to_vec(),
            explained_variance_ratio: self.explained_variance_ratio[..k].to_vec(),
            rank_deficient: self.rank_deficient,
        })
    }

    fn prepare(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Shape(format!(
                "expected {} feature columns, got {}",
                self.n_features(),
                x.ncols()
            )));
        }
        let mut c = x.clone();
        for mut row in c.row_iter_mut() {
            row -= self.mean.transpose();
            if let Some(s) = &self.scale {
                row.component_div_assign(&s.transpose());
            }
        }
        Ok(c)
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.prepare(x)? * self.basis.transpose())
    }

    pub fn inverse_transform(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if z.ncols() != self.n_components() {
            return Err(Error::Shape(format!(
                "expected {} component columns, got {}",
                self.n_components(),
                z.ncols()
            )));
        }
        let mut x = z * &self.basis;
        for mut row in x.row_iter_mut() {
            if let Some(s) = &self.scale {
                row.component_mul_assign(&s.transpose());
            }
            row += self.mean.transpose();
        }
        Ok(x)
    }

    /// Smallest number of leading components whose cumulative explained
    /// variance ratio reaches `threshold`, if the fitted components get there.
    pub fn components_for_variance(&self, threshold: f64) -> Option<usize> {
        let mut acc = 0.0;
        for (i, r) in self.explained_variance_ratio.iter().enumerate() {
            acc += r;
            if acc >= threshold {
                return Some(i + 1);
            }
        }
        None
    }
}

/// Fits up to `max_components` principal components of the rows of `x`.
///
/// Components whose singular value is below `s_max * max(n, d) * eps` are
/// dropped and flagged via `rank_deficient`. Each component's sign is chosen
/// so that its largest-magnitude entry is positive.
pub fn pca_fit(x: &DMatrix<f64>, max_components: usize, standardize: bool) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(Error::Size(format!("PCA needs at least 2 rows, got {n}")));
    }
    if max_components == 0 || max_components > (n - 1).min(d) {
        return Err(Error::Bound(format!(
            "max_components {max_components} must be in 1..={} for a {n}x{d} matrix",
            (n - 1).min(d)
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("PCA input contains non-finite values".into()));
    }

    let mean = DVector::from_iterator(d, x.column_iter().map(|c| c.mean()));
    let mut centred = x.clone();
    for mut row in centred.row_iter_mut() {
        row -= mean.transpose();
    }
    let scale = if standardize {
        let s = DVector::from_iterator(
            d,
            centred.column_iter().map(|c| {
                let sd = (c.norm_squared() / (n - 1) as f64).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            }),
        );
        for mut row in centred.row_iter_mut() {
            row.component_div_assign(&s.transpose());
        }
        Some(s)
    } else {
        None
    };

    let total = centred.norm_squared();
    let (singular_values, v_t) = right_singular_vectors(&centred);
    let mut order: Vec<usize> = (0..singular_values.len()).collect();
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));

    let s_max = order.first().map_or(0.0, |&i| singular_values[i]);
    let tol = s_max * n.max(d) as f64 * f64::EPSILON;
    let rank = order
        .iter()
        .take_while(|&&i| singular_values[i] > tol && total > 0.0)
        .count();
    let k = max_components.min(rank);

    let mut basis = DMatrix::zeros(k, d);
    let mut variance = Vec::with_capacity(k);
    let mut ratio = Vec::with_capacity(k);
    for (row, &src) in order.iter().take(k).enumerate() {
        let mut comp = v_t.row(src).into_owned();
        let pivot = comp
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best })
            .0;
        if comp[pivot] < 0.0 {
            comp.neg_mut();
        }
        basis.set_row(row, &comp);
        let s2 = singular_values[src].powi(2);
        variance.push(s2 / (n - 1) as f64);
        ratio.push(s2 / total);
    }
    Ok(PcaModel {
        mean,
        scale,
        basis,
        explained_variance: variance,
        explained_variance_ratio: ratio,
        rank_deficient: k < max_components,
    })
}

/// Singular values of `a` (unordered) and the matching right singular
/// vectors as the rows of the returned matrix.
fn right_singular_vectors(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (n, d) = a.shape();
    if n >= d {
        // A = Q R, so A and R share right singular vectors
        let r = a.clone().qr().r();
        let (sigma, v) = one_sided_jacobi(r);
        (sigma, v.transpose())
    } else {
        // A' = Q R, so the right singular vectors of A are Q times the left
        // singular vectors of R, which are the right singular vectors of R'
        let qr = a.transpose().qr();
        let (sigma, w) = one_sided_jacobi(qr.r().transpose());
        (sigma, (qr.q() * w).transpose())
    }
}

/// Rotates column pairs of `a` until they are mutually orthogonal. Returns
/// the column norms (singular values) and the accumulated rotation `V`, with
/// `a_input V` having orthogonal columns.
fn one_sided_jacobi(mut a: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let k = a.ncols();
    let mut v = DMatrix::<f64>::identity(k, k);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dot(&a.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = DVector::from_iterator(k, a.column_iter().map(|c| c.norm()));
    (sigma, v)
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (mp, mq) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * mp - s * mq;
        m[(i, q)] = s * mp + c * mq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_give_one_component() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, -1.0, -2.0, -3.0, 0.5, 1.0, 1.5]);
        let m = pca_fit(&x, 2, false).unwrap();
        assert_eq!(m.n_components(), 1);
        assert!(m.rank_deficient);
        assert!((m.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_columns_align_with_axes() {
        // mean-zero, orthogonal columns of norms 3, 2, 1
        #[rustfmt::skip]
        let x = DMatrix::from_row_slice(4, 3, &[
            1.5, 1.0, 0.5,
            -1.5, 1.0, -0.5,
            1.5, -1.0, -0.5,
            -1.5, -1.0, 0.5,
        ]);
        let m = pca_fit(&x, 3, false).unwrap();
        let expected = [9.0 / 14.0, 4.0 / 14.0, 1.0 / 14.0];
        for (r, e) in m.explained_variance_ratio.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12);
        }
        assert!((&m.basis - DMatrix::<f64>::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn transform_of_mean_is_zero_and_inverse_recovers() {
        let x = DMatrix::from_fn(6, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 + 0.1 * (i * j) as f64);
        let m = pca_fit(&x, 4, false).unwrap();
        let mean_row = DMatrix::from_row_slice(1, 4, m.mean.as_slice());
        assert!(m.transform(&mean_row).unwrap().abs().max() < 1e-12);
        let z = m.transform(&x).unwrap();
        let back = m.inverse_transform(&z).unwrap();
        assert!((back - &x).norm() < 1e-8);
        // unit coordinate maps to mean + component
        let mut e1 = DMatrix::zeros(1, m.n_components());
        e1[(0, 1)] = 1.0;
        let rec = m.inverse_transform(&e1).unwrap();
        let want = m.mean.transpose() + m.basis.row(1);
        assert!((rec - want).abs().max() < 1e-14);
        assert!(m.inverse_transform(&DMatrix::zeros(1, m.n_components())).unwrap().row(0) == m.mean.transpose());
    }

    #[test]
    fn shape_errors() {
        let x = DMatrix::from_fn(5, 3, |i, j| (i + j * j) as f64);
        let m = pca_fit(&x, 2, false).unwrap();
        assert!(matches!(m.transform(&DMatrix::zeros(2, 4)), Err(Error::Shape(_))));
        assert!(matches!(m.inverse_transform(&DMatrix::zeros(2, 3)), Err(Error::Shape(_))));
        assert!(pca_fit(&x, 4, false).is_err());
        assert!(pca_fit(&DMatrix::zeros(1, 3), 1, false).is_err());
    }

    #[test]
    fn standardised_fit_round_trips() {
        let x = DMatrix::from_fn(8, 3, |i, j| (i as f64).powi(j as i32 + 1) * 10f64.powi(j as i32));
        let m = pca_fit(&x, 3, true).unwrap();
        assert!(m.scale.is_some());
        let back = m.inverse_transform(&m.transform(&x).unwrap()).unwrap();
        assert!((back - &x).norm() / x.norm() < 1e-10);
    }

    #[test]
    fn sign_convention() {
        let x = DMatrix::from_fn(10, 5, |i, j| ((i * 31 + j * 17) % 11) as f64 - 5.0);
        let m = pca_fit(&x, 4, false).unwrap();
        for row in m.basis.row_iter() {
            let (mut best, mut idx) = (0.0f64, 0);
            for (j, v) in row.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    idx = j;
                }
            }
            assert!(row[idx] > 0.0);
        }
    }

    #[test]
    fn variance_is_conserved_with_a_null_direction() {
        // centred 4 x 7 data has one exactly zero singular value
        let mut rng = crate::rng::SplitMix64::new(9);
        for _ in 0..200 {
            let x = DMatrix::from_fn(4, 7, |_, _| rng.next_f64() * 2.0 - 1.0);
            let m = pca_fit(&x, 3, false).unwrap();
            let total: f64 = m.explained_variance_ratio.iter().sum();
            assert!((total - 1.0).abs() < 1e-12, "{total}");
        }
    }

    #[test]
    fn wide_and_tall_paths_agree() {
        let x = DMatrix::from_fn(9, 14, |i, j| ((i * 13 + j * 7) % 10) as f64 + (i as f64 * 0.3 + j as f64).cos());
        let wide = pca_fit(&x, 6, false).unwrap();
        // each component is an eigenvector of the sample covariance
        let xc = {
            let mut c = x.clone();
            for mut row in c.row_iter_mut() {
                row -= wide.mean.transpose();
            }
            c
        };
        let cov = xc.transpose() * &xc / 8.0;
        for (k, comp) in wide.basis.row_iter().enumerate() {
            let v = comp.transpose();
            let cv = &cov * &v;
            assert!((cv - &v * wide.explained_variance[k]).norm() < 1e-9);
        }
        let gram = &wide.basis * wide.basis.transpose();
        assert!((gram - DMatrix::<f64>::identity(6, 6)).abs().max() < 1e-12);
    }

    #[test]
    fn variance_threshold_query() {
        #[rustfmt::skip]
        let x = DMatrix::from_row_slice(4, 3, &[
            1.5, 1.0, 0.5,
            -1.5, 1.0, -0.5,
            1.5, -1.0, -0.5,
            -1.5, -1.0, 0.5,
        ]);
        let m = pca_fit(&x, 3, false).unwrap();
        assert_eq!(m.components_for_variance(0.5), Some(1));
        assert_eq!(m.components_for_variance(0.9), Some(2));
        assert_eq!(m.components_for_variance(0.95), Some(3));
        assert_eq!(m.truncate(1).unwrap().components_for_variance(0.95), None);
    }
}
