//! Ridge regression with an unpenalised intercept and exact leave-one-out
//! error via the hat-matrix diagonal.
//!
//! With `Zc`, `yc` the column-centred design and target, the weights solve
//! `(Zc' Zc + lambda I) w = Zc' yc`. One symmetric eigendecomposition
//! `Zc' Zc = V diag(e) V'` serves every lambda: with `P = Zc V`,
//!
//! ```text
//! w      = V diag(1 / (e + lambda)) P' yc
//! y_hat  = mean(y) + P diag(1 / (e + lambda)) P' yc
//! h_ii   = 1/n + sum_j P_ij^2 / (e_j + lambda)
//! loo_i  = (y_i - y_hat_i) / (1 - h_ii)
//! ```
//!
//! The `1/n` term is the intercept's share of the hat matrix; with it the
//! shortcut equals refitting (including re-centring) without row `i`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub weights: DVector<f64>,
    pub intercept: f64,
    pub lambda: f64,
    pub training_target_mean: f64,
}

impl RidgeModel {
    pub fn predict(&self, z: &DMatrix<f64>) -> Result<DVector<f64>> {
        ridge_predict(self, z)
    }
}

/// Ascending, strictly positive regularisation strengths.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid(Vec<f64>);

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("lambda grid is empty".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("lambda grid values must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("lambda grid must be strictly ascending".into()));
        }
        Ok(Self(values))
    }

    /// `count` points spaced evenly in log10 between `min` and `max`.
    pub fn log_spaced(min: f64, max: f64, count: usize) -> Result<Self> {
        if count == 1 {
            return Self::new(vec![min]);
        }
        let (a, b) = (min.log10(), max.log10());
        Self::new(
            (0..count)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
                .collect(),
        )
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self::log_spaced(1e-4, 1e4, 25).expect("default grid is valid")
    }
}

/// Factorisation of one centred training set, reusable across lambdas.
#[derive(Debug, Clone)]
pub struct RidgeSystem {
    n: usize,
    z_mean: DVector<f64>,
    y: DVector<f64>,
    y_mean: f64,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// `Zc V`, n x k.
    projected: DMatrix<f64>,
    /// `P' yc`, length k.
    projected_target: DVector<f64>,
}

impl RidgeSystem {
    pub fn new(z: &DMatrix<f64>, y: &DVector<f64>) -> Result<Self> {
        let (n, k) = z.shape();
        if n < 2 {
            return Err(Error::Size(format!("ridge regression needs at least 2 rows, got {n}")));
        }
        if y.len() != n {
            return Err(Error::Shape(format!("{n} design rows but {} targets", y.len())));
        }
        if z.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Data("ridge inputs contain non-finite values".into()));
        }
        let z_mean = DVector::from_iterator(k, z.column_iter().map(|c| c.mean()));
        let y_mean = y.mean();
        let mut zc = z.clone();
        for mut row in zc.row_iter_mut() {
            row -= z_mean.transpose();
        }
        let yc = y.add_scalar(-y_mean);
        let eig = SymmetricEigen::new(zc.transpose() * &zc);
        let projected = &zc * &eig.eigenvectors;
        let projected_target = projected.transpose() * &yc;
        Ok(Self {
            n,
            z_mean,
            y: y.clone(),
            y_mean,
            eigenvalues: eig.eigenvalues.map(|e| e.max(0.0)),
            eigenvectors: eig.eigenvectors,
            projected,
            projected_target,
        })
    }

    fn check_lambda(lambda: f64) -> Result<()> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Data(format!("lambda must be positive, got {lambda}")));
        }
        Ok(())
    }

    fn shrunk_target(&self, lambda: f64) -> DVector<f64> {
        self.projected_target
            .zip_map(&self.eigenvalues, |t, e| t / (e + lambda))
    }

    pub fn fit(&self, lambda: f64) -> Result<RidgeModel> {
        Self::check_lambda(lambda)?;
        let weights = &self.eigenvectors * self.shrunk_target(lambda);
        let intercept = self.y_mean - self.z_mean.dot(&weights);
        Ok(RidgeModel {
            weights,
            intercept,
            lambda,
            training_target_mean: self.y_mean,
        })
    }

    /// Exact leave-one-out residuals for one lambda.
    pub fn loo_residuals(&self, lambda: f64) -> Result<DVector<f64>> {
        Self::check_lambda(lambda)?;
        let coef = self.shrunk_target(lambda);
        let inv = self.eigenvalues.map(|e| 1.0 / (e + lambda));
        let mut out = DVector::zeros(self.n);
        for i in 0..self.n {
            let p = self.projected.row(i);
            let fitted = self.y_mean + p.dot(&coef.transpose());
            let leverage = 1.0 / self.n as f64
                + p.iter().zip(inv.iter()).map(|(v, w)| v * v * w).sum::<f64>();
            if leverage >= 1.0 - 1e-12 {
                return Err(Error::Leverage { row: i, leverage });
            }
            out[i] = (self.y[i] - fitted) / (1.0 - leverage);
        }
        Ok(out)
    }
}

pub fn ridge_fit(z: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<RidgeModel> {
    RidgeSystem::check_lambda(lambda)?;
    RidgeSystem::new(z, y)?.fit(lambda)
}

pub fn ridge_predict(model: &RidgeModel, z: &DMatrix<f64>) -> Result<DVector<f64>> {
    if z.ncols() != model.weights.len() {
        return Err(Error::Shape(format!(
            "model has {} weights, input has {} columns",
            model.weights.len(),
            z.ncols()
        )));
    }
    Ok((z * &model.weights).add_scalar(model.intercept))
}

/// Leave-one-out mean squared error for each lambda of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LooCurve {
    pub lambdas: Vec<f64>,
    pub mse: Vec<f64>,
}

pub fn loo_curve(z: &DMatrix<f64>, y: &DVector<f64>, grid: &LambdaGrid) -> Result<LooCurve> {
    if z.nrows() < 3 {
        return Err(Error::Size(format!(
            "leave-one-out needs at least 3 rows, got {}",
            z.nrows()
        )));
    }
    loo_curve_with(&RidgeSystem::new(z, y)?, grid)
}

pub fn loo_curve_with(system: &RidgeSystem, grid: &LambdaGrid) -> Result<LooCurve> {
    let mse = grid
        .values()
        .iter()
        .map(|&l| system.loo_residuals(l).map(|r| r.norm_squared() / r.len() as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(LooCurve {
        lambdas: grid.values().to_vec(),
        mse,
    })
}

/// Lambda with the smallest LOO error; ties go to the larger lambda.
pub fn select_lambda(curve: &LooCurve) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for (&l, &m) in curve.lambdas.iter().zip(&curve.mse) {
        match best {
            Some((_, bm)) if m > bm => {}
            Some((bl, bm)) if m == bm && l < bl => {}
            _ => best = Some((l, m)),
        }
    }
    best.map(|(l, _)| l)
        .ok_or_else(|| Error::Data("empty LOO curve".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy() -> (DMatrix<f64>, DVector<f64>) {
        (
            DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]),
            DVector::from_vec(vec![2.0, 4.0, 6.0]),
        )
    }

    #[test]
    fn one_dimensional_closed_form() {
        // zc = (-1,0,1), yc = (-2,0,2): w = 4 / (2 + 1), b = 4 - 2w
        let (z, y) = toy();
        let m = ridge_fit(&z, &y, 1.0).unwrap();
        assert!((m.weights[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!((m.intercept - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn hand_computed_loo_values() {
        // explicit two-point refits: lambda=0.5 -> residuals (-1.5, 0, 1.5),
        // lambda=1 -> (-2, 0, 2), lambda=2 -> (-2.4, 0, 2.4)
        let (z, y) = toy();
        let grid = LambdaGrid::new(vec![0.5, 1.0, 2.0]).unwrap();
        let curve = loo_curve(&z, &y, &grid).unwrap();
        let want = [1.5, 8.0 / 3.0, 3.84];
        for (got, w) in curve.mse.iter().zip(want) {
            assert!((got - w).abs() < 1e-12, "{got} vs {w}");
        }
        assert_eq!(select_lambda(&curve).unwrap(), 0.5);
    }

    #[test]
    fn constant_target() {
        let z = DMatrix::from_fn(5, 2, |i, j| (i * (j + 1)) as f64);
        let y = DVector::from_element(5, 3.5);
        let m = ridge_fit(&z, &y, 0.1).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-14));
        assert!((m.intercept - 3.5).abs() < 1e-14);
    }

    #[test]
    fn huge_lambda_predicts_mean() {
        let z = DMatrix::from_fn(6, 2, |i, j| (i as f64).powi(j as i32 + 1));
        let y = DVector::from_fn(6, |i, _| (i * i) as f64);
        let m = ridge_fit(&z, &y, 1e12).unwrap();
        let pred = ridge_predict(&m, &z).unwrap();
        assert!(pred.iter().all(|p| (p - y.mean()).abs() < 1e-6));
    }

    #[test]
    fn tiny_lambda_interpolates_exact_linear_data() {
        let z = DMatrix::from_fn(8, 2, |i, j| ((i * 3 + j * 5) % 7) as f64 + j as f64 * 0.5);
        let y = DVector::from_fn(8, |i, _| 1.0 + 2.0 * z[(i, 0)] - 0.5 * z[(i, 1)]);
        let m = ridge_fit(&z, &y, 1e-10).unwrap();
        let pred = ridge_predict(&m, &z).unwrap();
        assert!((pred - &y).abs().max() < 1e-6);
    }

    #[test]
    fn predict_on_zero_is_intercept() {
        let (z, y) = toy();
        let m = ridge_fit(&z, &y, 1.0).unwrap();
        let p = ridge_predict(&m, &DMatrix::zeros(4, 1)).unwrap();
        assert!(p.iter().all(|&v| v == m.intercept));
        assert!(matches!(ridge_predict(&m, &DMatrix::zeros(4, 2)), Err(Error::Shape(_))));
    }

    #[test]
    fn input_validation() {
        let (z, mut y) = toy();
        assert!(ridge_fit(&z, &y, 0.0).is_err());
        assert!(ridge_fit(&z, &y, -1.0).is_err());
        y[1] = f64::NAN;
        assert!(matches!(ridge_fit(&z, &y, 1.0), Err(Error::Data(_))));
        let short = DMatrix::from_column_slice(2, 1, &[1.0, 2.0]);
        let y2 = DVector::from_vec(vec![1.0, 2.0]);
        assert!(loo_curve(&short, &y2, &LambdaGrid::default()).is_err());
    }

    #[test]
    fn degenerate_leverage_is_reported() {
        // four points, three free directions plus intercept: leverage -> 1 as lambda -> 0
        let z = DMatrix::from_row_slice(4, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let grid = LambdaGrid::new(vec![1e-14]).unwrap();
        assert!(matches!(loo_curve(&z, &y, &grid), Err(Error::Leverage { .. })));
    }

    #[test]
    fn tie_rules() {
        let curve = LooCurve {
            lambdas: vec![0.1, 1.0, 10.0],
            mse: vec![2.0, 2.0, 2.0],
        };
        assert_eq!(select_lambda(&curve).unwrap(), 10.0);
        let curve = LooCurve {
            lambdas: vec![0.1, 1.0, 10.0, 100.0],
            mse: vec![1.0, 3.0, 1.0, 4.0],
        };
        assert_eq!(select_lambda(&curve).unwrap(), 10.0);
        let curve = LooCurve {
            lambdas: vec![0.1, 1.0, 10.0],
            mse: vec![3.0, 1.0, 2.0],
        };
        assert_eq!(select_lambda(&curve).unwrap(), 1.0);
    }

    #[test]
    fn default_grid() {
        let g = LambdaGrid::default();
        assert_eq!(g.values().len(), 25);
        assert!((g.values()[0] - 1e-4).abs() < 1e-18);
        assert!((g.values()[24] - 1e4).abs() < 1e-8);
        assert!((g.values()[12] - 1.0).abs() < 1e-12);
        assert!(LambdaGrid::new(vec![1.0, 1.0]).is_err());
    }

    fn matrix_strategy() -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>)> {
        (4usize..20, 1usize..5).prop_flat_map(|(n, k)| {
            (
                proptest::collection::vec(-10.0..10.0f64, n * k),
                proptest::collection::vec(-10.0..10.0f64, n),
            )
                .prop_map(move |(zs, ys)| (DMatrix::from_vec(n, k, zs), DVector::from_vec(ys)))
        })
    }

    proptest! {
        #[test]
        fn shrinkage_is_monotone((z, y) in matrix_strategy(), a in 0.01..10.0f64, b in 0.01..10.0f64) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let s = RidgeSystem::new(&z, &y).unwrap();
            let w_lo = s.fit(lo).unwrap().weights.norm();
            let w_hi = s.fit(hi).unwrap().weights.norm();
            prop_assert!(w_lo >= w_hi - 1e-12 * (1.0 + w_lo));
        }

        #[test]
        fn row_permutation_invariance((z, y) in matrix_strategy(), seed in any::<u64>()) {
            let n = z.nrows();
            let mut perm: Vec<usize> = (0..n).collect();
            crate::rng::SplitMix64::new(seed).shuffle(&mut perm);
            let zp = DMatrix::from_fn(n, z.ncols(), |i, j| z[(perm[i], j)]);
            let yp = DVector::from_fn(n, |i, _| y[perm[i]]);
            let a = ridge_fit(&z, &y, 0.7).unwrap();
            let b = ridge_fit(&zp, &yp, 0.7).unwrap();
            prop_assert!((a.weights - b.weights).abs().max() < 1e-10);
            prop_assert!((a.intercept - b.intercept).abs() < 1e-10);
        }

        #[test]
        fn target_shift((z, y) in matrix_strategy(), c in -50.0..50.0f64) {
            let a = ridge_fit(&z, &y, 0.3).unwrap();
            let b = ridge_fit(&z, &y.add_scalar(c), 0.3).unwrap();
            prop_assert!((a.weights - b.weights).abs().max() < 1e-10);
            prop_assert!((b.intercept - a.intercept - c).abs() < 1e-10);
        }
    }
}
