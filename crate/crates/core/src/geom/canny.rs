//! Canny edge detection on 8-bit RGB patches, in exact integer arithmetic.
//!
//! Stages:
//! 1. Luma `Y = round((299 R + 587 G + 114 B) / 1000)` (ITU-R BT.601).
//! 2. 5x5 Gaussian blur, sigma 1.4, as the outer product of the integer taps
//!    `[360, 775, 1000, 775, 360]` (`1000 * exp(-x^2 / (2 * 1.4^2))`, rounded).
//!    The result is left unnormalised so every later stage stays exact.
//! 3. 3x3 Sobel gradients.
//! 4. Non-maximum suppression along the gradient direction quantised to
//!    0/45/90/135 degrees. A pixel survives if its magnitude is `>=` the
//!    neighbour behind it and `>` the neighbour ahead of it, so a plateau of
//!    two equal maxima yields a one-pixel line.
//! 5. Double threshold relative to the largest gradient magnitude and
//!    hysteresis over 8-connected neighbours.
//!
//! Borders replicate the nearest pixel for blur and Sobel; neighbours outside
//! the patch count as zero magnitude during suppression.

use super::image::ImagePatch;

pub const GAUSS_TAPS: [i64; 5] = [360, 775, 1000, 775, 360];

/// `tan(22.5 deg)` as the integer fraction used for direction sectors.
pub const TAN_22_5: (i128, i128) = (41_421, 100_000);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyThresholds {
    /// Fraction of the maximum gradient magnitude for weak edges.
    pub low: f64,
    /// Fraction of the maximum gradient magnitude for strong edges.
    pub high: f64,
}

impl Default for CannyThresholds {
    fn default() -> Self {
        Self { low: 0.1, high: 0.3 }
    }
}

impl CannyThresholds {
    pub fn validate(&self) -> crate::Result<()> {
        if !(0.0 <= self.low && self.low < self.high) {
            return Err(crate::Error::Config(format!(
                "Canny thresholds need 0 <= low < high, got low={} high={}",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

pub fn luma(rgb: [u8; 3]) -> i64 {
    (299 * rgb[0] as i64 + 587 * rgb[1] as i64 + 114 * rgb[2] as i64 + 500) / 1000
}

#[inline]
fn clamp_idx(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Binary edge map, row-major, `true` for edge pixels.
pub fn canny_edges(patch: &ImagePatch, thresholds: CannyThresholds) -> Vec<bool> {
    let (w, h) = (patch.width(), patch.height());
    let gray: Vec<i64> = patch.pixels().map(luma).collect();

    // separable blur: rows then columns
    let mut tmp = vec![0i64; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = GAUSS_TAPS
                .iter()
                .enumerate()
                .map(|(k, t)| t * gray[y * w + clamp_idx(x as isize + k as isize - 2, w)])
                .sum();
        }
    }
    let mut blurred = vec![0i64; w * h];
    for y in 0..h {
        for x in 0..w {
            blurred[y * w + x] = GAUSS_TAPS
                .iter()
                .enumerate()
                .map(|(k, t)| t * tmp[clamp_idx(y as isize + k as isize - 2, h) * w + x])
                .sum();
        }
    }

    // separable Sobel: smoothing [1,2,1] across, difference [-1,0,1] along
    let at = |x: isize, y: isize| blurred[clamp_idx(y, h) * w + clamp_idx(x, w)];
    let mut gx = vec![0i64; w * h];
    let mut gy = vec![0i64; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let col = |xx: isize| at(xx, y - 1) + 2 * at(xx, y) + at(xx, y + 1);
            let row = |yy: isize| at(x - 1, yy) + 2 * at(x, yy) + at(x + 1, yy);
            let i = y as usize * w + x as usize;
            gx[i] = col(x + 1) - col(x - 1);
            gy[i] = row(y + 1) - row(y - 1);
        }
    }
    let mag2: Vec<i128> = gx
        .iter()
        .zip(&gy)
        .map(|(&a, &b)| a as i128 * a as i128 + b as i128 * b as i128)
        .collect();

    let max2 = mag2.iter().copied().max().unwrap_or(0);
    if max2 == 0 {
        return vec![false; w * h];
    }

    let mut thin = vec![0i128; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag2[i];
            if m == 0 {
                continue;
            }
            let (dx, dy) = direction_step(gx[i], gy[i]);
            let neighbour = |sx: isize, sy: isize| {
                let (nx, ny) = (x as isize + sx, y as isize + sy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    0
                } else {
                    mag2[ny as usize * w + nx as usize]
                }
            };
            if m >= neighbour(-dx, -dy) && m > neighbour(dx, dy) {
                thin[i] = m;
            }
        }
    }

    let max_mag = (max2 as f64).sqrt();
    let high = thresholds.high * max_mag;
    let low = thresholds.low * max_mag;
    let strong = |m: i128| m > 0 && (m as f64).sqrt() >= high;
    let weak = |m: i128| m > 0 && (m as f64).sqrt() >= low;

    let mut edges = vec![false; w * h];
    let mut stack: Vec<usize> = (0..w * h).filter(|&i| strong(thin[i])).collect();
    for &i in &stack {
        edges[i] = true;
    }
    while let Some(i) = stack.pop() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for sy in -1..=1 {
            for sx in -1..=1 {
                let (nx, ny) = (x + sx, y + sy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edges[j] && weak(thin[j]) {
                    edges[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    edges
}

/// Unit step `(dx, dy)` along the quantised gradient direction (y grows down).
pub fn direction_step(gx: i64, gy: i64) -> (isize, isize) {
    let (ax, ay) = (gx.unsigned_abs() as i128, gy.unsigned_abs() as i128);
    let (num, den) = TAN_22_5;
    if ay * den <= ax * num {
        (1, 0)
    } else if ax * den <= ay * num {
        (0, 1)
    } else if (gx > 0) == (gy > 0) {
        (1, 1)
    } else {
        (1, -1)
    }
}

/// Fraction of pixels marked as edges, in `[0, 1]`.
pub fn canny_edge_density(patch: &ImagePatch, thresholds: CannyThresholds) -> f64 {
    let edges = canny_edges(patch, thresholds);
    edges.iter().filter(|&&e| e).count() as f64 / edges.len() as f64
}

/// Skin smoothness: `1 - edge density`.
pub fn smoothness(patch: &ImagePatch, thresholds: CannyThresholds) -> f64 {
    1.0 - canny_edge_density(patch, thresholds)
}
