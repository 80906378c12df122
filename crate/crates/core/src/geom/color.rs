//! Mean skin colour in HSV space.

use super::image::ImagePatch;

/// RGB to HSV with `h` in degrees `[0, 360)` and `s`, `v` in `[0, 1]`.
/// Achromatic pixels get hue 0.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    let h = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (wrap_degrees(h), s, v)
}

fn wrap_degrees(h: f64) -> f64 {
    let h = h.rem_euclid(360.0);
    if h >= 360.0 {
        0.0
    } else {
        h
    }
}

/// Circular mean hue and arithmetic mean saturation and value over a patch.
/// When hues cancel out (zero resultant) the mean hue is reported as 0.
pub fn skin_color_hsv(patch: &ImagePatch) -> (f64, f64, f64) {
    let (mut sin, mut cos, mut s_sum, mut v_sum) = (0.0, 0.0, 0.0, 0.0);
    let mut n = 0usize;
    for px in patch.pixels() {
        let (h, s, v) = rgb_to_hsv(px);
        let rad = h.to_radians();
        sin += rad.sin();
        cos += rad.cos();
        s_sum += s;
        v_sum += v;
        n += 1;
    }
    let n_f = n as f64;
    let h = if sin.hypot(cos) <= 1e-12 * n_f {
        0.0
    } else {
        wrap_degrees(sin.atan2(cos).to_degrees())
    };
    (h, s_sum / n_f, v_sum / n_f)
}
