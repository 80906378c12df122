//! Attribute-by-attribute Spearman heatmaps, their similarity, and export.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::corr::{pearson, spearman};
use crate::data::Attribute;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeHeatmap {
    pub attributes: Vec<Attribute>,
    pub matrix: DMatrix<f64>,
    /// Attributes whose score vector was constant; their off-diagonal
    /// entries are 0.
    pub degenerate: Vec<bool>,
}

/// Spearman correlation between every pair of per-face score vectors. All
/// vectors must share one face order.
pub fn attribute_heatmap(scores: &[(Attribute, Vec<f64>)]) -> Result<AttributeHeatmap> {
    let m = scores.len();
    if m == 0 {
        return Err(Error::Size("no attributes for heatmap".into()));
    }
    let len = scores[0].1.len();
    if len < 3 {
        return Err(Error::Size(format!("heatmap needs at least 3 faces, got {len}")));
    }
    if let Some((a, v)) = scores.iter().find(|(_, v)| v.len() != len) {
        return Err(Error::Shape(format!("attribute `{a}` has {} faces, expected {len}", v.len())));
    }
    let degenerate: Vec<bool> = scores.iter().map(|(_, v)| v.iter().all(|&x| x == v[0])).collect();
    let mut matrix = DMatrix::identity(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let r = if degenerate[i] || degenerate[j] {
                0.0
            } else {
                spearman(&scores[i].1, &scores[j].1)?.r
            };
            matrix[(i, j)] = r;
            matrix[(j, i)] = r;
        }
    }
    Ok(AttributeHeatmap {
        attributes: scores.iter().map(|(a, _)| a.clone()).collect(),
        matrix,
        degenerate,
    })
}

impl AttributeHeatmap {
    /// Strict upper triangle, row-major.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let m = self.attributes.len();
        (0..m)
            .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
            .map(|(i, j)| self.matrix[(i, j)])
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("attribute");
        for a in &self.attributes {
            out.push(',');
            out.push_str(a.as_str());
        }
        out.push('\n');
        for (i, a) in self.attributes.iter().enumerate() {
            out.push_str(a.as_str());
            for j in 0..self.attributes.len() {
                let _ = write!(out, ",{:.6}", self.matrix[(i, j)]);
            }
            out.push('\n');
        }
        out
    }

    /// Self-contained SVG rendering.
    ///
    /// Colour scale is diverging and linear in the correlation value:
    /// -1 maps to `rgb(33,102,172)` (blue), 0 to `rgb(247,247,247)` (near
    /// white) and +1 to `rgb(178,24,43)` (red); channels are interpolated
    /// linearly between the neighbouring anchors and rounded.
    pub fn to_svg(&self, title: &str) -> String {
        const CELL: usize = 22;
        const LABEL: usize = 150;
        const TOP: usize = 40;
        let m = self.attributes.len();
        let grid = CELL * m;
        let width = LABEL + grid + 90;
        let height = TOP + LABEL + grid + 20;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
        );
        let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="10" y="24" font-size="16">{}</text>"#, escape(title));
        let x0 = LABEL;
        let y0 = TOP + LABEL;
        for (j, a) in self.attributes.iter().enumerate() {
            let x = x0 + j * CELL + CELL / 2 + 4;
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" font-size="11" transform="rotate(-60 {x} {})">{}</text>"#,
                y0 - 4,
                y0 - 4,
                escape(a.as_str())
            );
        }
        for (i, a) in self.attributes.iter().enumerate() {
            let y = y0 + i * CELL;
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#,
                x0 - 4,
                y + CELL / 2 + 4,
                escape(a.as_str())
            );
            for j in 0..m {
                let v = self.matrix[(i, j)];
                let (r, g, b) = diverging_color(v);
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="rgb({r},{g},{b})"><title>{} / {}: {v:.4}</title></rect>"#,
                    x0 + j * CELL,
                    escape(a.as_str()),
                    escape(self.attributes[j].as_str()),
                );
            }
        }
        // legend: 21 steps from +1 (top) to -1 (bottom)
        let lx = x0 + grid + 20;
        let step = (grid.max(105)) / 21;
        for k in 0..21 {
            let v = 1.0 - k as f64 * 0.1;
            let (r, g, b) = diverging_color(v);
            let _ = writeln!(
                s,
                r#"<rect x="{lx}" y="{}" width="14" height="{step}" fill="rgb({r},{g},{b})"/>"#,
                y0 + k * step
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">+1</text>"#, lx + 18, y0 + 8);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">0</text>"#, lx + 18, y0 + 10 * step + 8);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">-1</text>"#, lx + 18, y0 + 21 * step);
        s.push_str("</svg>\n");
        s
    }
}

const NEG: (f64, f64, f64) = (33.0, 102.0, 172.0);
const MID: (f64, f64, f64) = (247.0, 247.0, 247.0);
const POS: (f64, f64, f64) = (178.0, 24.0, 43.0);

pub fn diverging_color(v: f64) -> (u8, u8, u8) {
    let v = v.clamp(-1.0, 1.0);
    let (from, to, t) = if v < 0.0 { (MID, NEG, -v) } else { (MID, POS, v) };
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    (lerp(from.0, to.0), lerp(from.1, to.1), lerp(from.2, to.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Pearson correlation between the strict upper triangles of two heatmaps
/// over the same attributes.
pub fn heatmap_similarity(h1: &AttributeHeatmap, h2: &AttributeHeatmap) -> Result<f64> {
    if h1.attributes != h2.attributes {
        return Err(Error::Alignment(format!(
            "{} vs {} attributes, or different order",
            h1.attributes.len(),
            h2.attributes.len()
        )));
    }
    Ok(pearson(&h1.upper_triangle(), &h2.upper_triangle())?.r)
}
