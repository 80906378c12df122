//! Reference implementations used as oracles by the integration tests.
//! Each one is written directly from its mathematical definition and shares
//! no code with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

// ---------------------------------------------------------------------------
// Canny edge detector, computed pixel by pixel with full 2D kernels.

pub fn naive_canny(width: usize, height: usize, rgb: &[[u8; 3]], low: f64, high: f64) -> Vec<bool> {
    let (w, h) = (width as isize, height as isize);
    let clamp = |v: isize, len: isize| v.max(0).min(len - 1);
    let gray: Vec<i64> = rgb
        .iter()
        .map(|p| {
            // 0.299 R + 0.587 G + 0.114 B in thousandths, rounded half up
            let t = 299 * p[0] as i64 + 587 * p[1] as i64 + 114 * p[2] as i64;
            (t + 500).div_euclid(1000)
        })
        .collect();
    let g = |x: isize, y: isize| gray[(clamp(y, h) * w + clamp(x, w)) as usize];

    // 5x5 Gaussian kernel, sigma 1.4, taps round(1000 exp(-x^2 / 3.92))
    let taps: Vec<i64> = (-2..=2i32)
        .map(|k| (1000.0 * (-(k * k) as f64 / (2.0 * 1.4 * 1.4)).exp()).round() as i64)
        .collect();
    let mut blur = vec![0i64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0i64;
            for ky in -2..=2isize {
                for kx in -2..=2isize {
                    s += taps[(ky + 2) as usize] * taps[(kx + 2) as usize] * g(x + kx, y + ky);
                }
            }
            blur[(y * w + x) as usize] = s;
        }
    }
    let b = |x: isize, y: isize| blur[(clamp(y, h) * w + clamp(x, w)) as usize];

    const SX: [[i64; 3]; 3] = [[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]];
    const SY: [[i64; 3]; 3] = [[-1, -2, -1], [0, 0, 0], [1, 2, 1]];
    let mut gx = vec![0i64; (w * h) as usize];
    let mut gy = vec![0i64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let (mut sx, mut sy) = (0, 0);
            for ky in 0..3 {
                for kx in 0..3 {
                    let v = b(x + kx as isize - 1, y + ky as isize - 1);
                    sx += SX[ky][kx] * v;
                    sy += SY[ky][kx] * v;
                }
            }
            gx[(y * w + x) as usize] = sx;
            gy[(y * w + x) as usize] = sy;
        }
    }
    let mag2: Vec<i128> = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| (a as i128).pow(2) + (b as i128).pow(2))
        .collect();
    let max2 = *mag2.iter().max().unwrap();
    if max2 == 0 {
        return vec![false; (w * h) as usize];
    }

    // sector boundaries at 22.5 degrees, using the same rational tangent
    let t = 0.41421f64.atan().to_degrees();
    let mut thin = vec![0i128; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if mag2[i] == 0 {
                continue;
            }
            let mut angle = (gy[i] as f64).atan2(gx[i] as f64).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            if angle >= 180.0 {
                angle -= 180.0;
            }
            let (dx, dy) = if angle <= t || angle >= 180.0 - t {
                (1, 0)
            } else if (angle - 90.0).abs() <= t {
                (0, 1)
            } else if angle < 90.0 {
                (1, 1)
            } else {
                (1, -1)
            };
            let at = |x: isize, y: isize| {
                if x < 0 || y < 0 || x >= w || y >= h {
                    0
                } else {
                    mag2[(y * w + x) as usize]
                }
            };
            if mag2[i] >= at(x - dx, y - dy) && mag2[i] > at(x + dx, y + dy) {
                thin[i] = mag2[i];
            }
        }
    }

    let max = (max2 as f64).sqrt();
    let is_strong = |m: i128| m > 0 && (m as f64).sqrt() >= high * max;
    let is_weak = |m: i128| m > 0 && (m as f64).sqrt() >= low * max;
    let mut edges: Vec<bool> = thin.iter().map(|&m| is_strong(m)).collect();
    // grow until nothing changes
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                let i = (y * w + x) as usize;
                if edges[i] || !is_weak(thin[i]) {
                    continue;
                }
                let touches = (-1..=1).any(|sy| {
                    (-1..=1).any(|sx| {
                        let (nx, ny) = (x + sx, y + sy);
                        nx >= 0 && ny >= 0 && nx < w && ny < h && edges[(ny * w + nx) as usize]
                    })
                });
                if touches {
                    edges[i] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return edges;
        }
    }
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition by cyclic Jacobi rotations.

/// Eigenvalues in descending order and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].powi(2))
            .sum();
        if off.sqrt() < 1e-15 * m.norm().max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Sample covariance (divisor n - 1) of the columns of `x`.
pub fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = x.shape();
    let means: Vec<f64> = (0..d).map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64).collect();
    DMatrix::from_fn(d, d, |a, b| {
        (0..n).map(|i| (x[(i, a)] - means[a]) * (x[(i, b)] - means[b])).sum::<f64>() / (n - 1) as f64
    })
}

// ---------------------------------------------------------------------------
// Ridge regression with an unpenalised intercept, refitted from scratch.

/// Solves `(Zc'Zc + lambda I) w = Zc'yc` by Gaussian elimination with partial
/// pivoting; returns `(w, intercept)`.
pub fn ridge_direct(z: &DMatrix<f64>, y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let (n, k) = z.shape();
    let zm: Vec<f64> = (0..k).map(|j| (0..n).map(|i| z[(i, j)]).sum::<f64>() / n as f64).collect();
    let ym = y.iter().sum::<f64>() / n as f64;
    let mut a = vec![vec![0.0; k + 1]; k];
    for r in 0..k {
        for c in 0..k {
            a[r][c] = (0..n).map(|i| (z[(i, r)] - zm[r]) * (z[(i, c)] - zm[c])).sum::<f64>();
        }
        a[r][r] += lambda;
        a[r][k] = (0..n).map(|i| (z[(i, r)] - zm[r]) * (y[i] - ym)).sum::<f64>();
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col].clone();
            for (v, p) in a[r].iter_mut().zip(&pivot_row).skip(col) {
                *v -= f * p;
            }
        }
    }
    let mut w = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * w[c]).sum();
        w[r] = (a[r][k] - s) / a[r][r];
    }
    let intercept = ym - zm.iter().zip(&w).map(|(m, w)| m * w).sum::<f64>();
    (w, intercept)
}

/// Leave-one-out residuals from `n` separate refits.
pub fn loo_by_refit(z: &DMatrix<f64>, y: &[f64], lambda: f64) -> Vec<f64> {
    let n = z.nrows();
    (0..n)
        .map(|held| {
            let keep: Vec<usize> = (0..n).filter(|&i| i != held).collect();
            let zk = z.select_rows(&keep);
            let yk: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
            let (w, b) = ridge_direct(&zk, &yk, lambda);
            let pred = b + (0..z.ncols()).map(|j| z[(held, j)] * w[j]).sum::<f64>();
            y[held] - pred
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Split-half reliability for raters `score = signal + noise`, rounded to
// integers.
//
// Rounding adds roughly uniform error with variance 1/12, so one rater's
// reliability is rho_1 = s^2 / (s^2 + e^2 + 1/12). A mean of m raters has
// rho_m = m rho_1 / (1 + (m - 1) rho_1) (Spearman-Brown), and the two halves
// correlate as sqrt(rho_a rho_b).

pub fn spearman_brown(rho1: f64, m: f64) -> f64 {
    m * rho1 / (1.0 + (m - 1.0) * rho1)
}

pub fn expected_split_half(signal_sd: f64, noise_sd: f64, raters: usize) -> f64 {
    let rho1 = signal_sd.powi(2) / (signal_sd.powi(2) + noise_sd.powi(2) + 1.0 / 12.0);
    let a = raters.div_ceil(2) as f64;
    let b = (raters / 2) as f64;
    (spearman_brown(rho1, a) * spearman_brown(rho1, b)).sqrt()
}

// ---------------------------------------------------------------------------

pub fn pearson_ref(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
