//! Hand-crafted geometric face features.
//!
//! A feature vector is, in this fixed order:
//!
//! 1. the named ratios of the loaded [`GeomConfig`] (29 for `geom-v1`),
//! 2. all 2278 pairwise landmark distances, pairs `(i, j)`, `i < j`, lexicographic,
//! 3. the 2278 pairwise orientations in `[0, pi)` in the same pair order,
//! 4. per configured skin window: smoothness, mean hue, saturation and value.
//!
//! With `geom-v1` and its two windows that is 29 + 2278 + 2278 + 8 = 4593
//! values; without an image (no windows) it is 4585.

pub mod canny;
pub mod color;
pub mod image;
pub mod pairwise;
pub mod ratios;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

pub use canny::{canny_edge_density, canny_edges, smoothness, CannyThresholds};
pub use color::{rgb_to_hsv, skin_color_hsv};
pub use image::ImagePatch;
pub use pairwise::{pairwise_distances, pairwise_orientations, NUM_PAIRS};
pub use ratios::{inter_ocular_distance, named_ratios, RatioDef};

use crate::data::{FaceId, LandmarkSet, NUM_LANDMARKS};
use crate::femb::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Layer name used when geometric features are exported as `FEMB`.
pub const GEOM_LAYER: &str = "geom-v1";

/// The shipped `geom-v1` definition file.
pub const GEOM_V1_CONFIG: &str = include_str!("../../config/geom-v1.conf");

/// Square skin window positioned relative to landmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub name: String,
    pub anchors: Vec<usize>,
    /// Centre offset from the anchor mean, in inter-ocular distances.
    pub offset: (f64, f64),
    /// Side length in inter-ocular distances.
    pub size: f64,
}

/// Pixel rectangle `(x0, y0, width, height)` inside an image.
pub type PixelRect = (usize, usize, usize, usize);

impl WindowSpec {
    /// Places the window on an image of the given size, clamping to its
    /// bounds. The result always covers at least one pixel.
    pub fn resolve(&self, lm: &LandmarkSet, width: usize, height: usize) -> Result<PixelRect> {
        let iod = inter_ocular_distance(lm);
        if iod == 0.0 {
            return Err(Error::Geometry(format!("window {}: inter-ocular distance", self.name)));
        }
        let n = self.anchors.len() as f64;
        let cx = self.anchors.iter().map(|&a| lm.point(a)[0]).sum::<f64>() / n + self.offset.0 * iod;
        let cy = self.anchors.iter().map(|&a| lm.point(a)[1]).sum::<f64>() / n + self.offset.1 * iod;
        let side = (self.size * iod).round().max(1.0);
        let clamp_axis = |c: f64, len: usize| -> (usize, usize) {
            let len_f = len as f64;
            let lo = (c - side / 2.0).floor().clamp(0.0, len_f - 1.0);
            let hi = (c - side / 2.0).floor() + side;
            let hi = hi.clamp(lo + 1.0, len_f);
            (lo as usize, (hi - lo) as usize)
        };
        let (x0, w) = clamp_axis(cx, width);
        let (y0, h) = clamp_axis(cy, height);
        Ok((x0, y0, w, h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomConfig {
    pub version: String,
    pub ratios: Vec<RatioDef>,
    pub windows: Vec<WindowSpec>,
    pub canny: CannyThresholds,
}

impl Default for GeomConfig {
    fn default() -> Self {
        Self::parse(GEOM_V1_CONFIG).expect("shipped geom-v1 config parses")
    }
}

impl GeomConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut ratios = Vec::new();
        let mut windows = Vec::new();
        let mut canny = CannyThresholds::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::Config(format!("geometry config line {}: {e}", idx + 1));
            let (lhs, rhs) = line
                .split_once('=')
                .ok_or_else(|| at(Error::Config("expected `key = value`".into())))?;
            let (lhs, rhs) = (lhs.trim(), rhs.trim());
            let mut words = lhs.split_whitespace();
            match (words.next(), words.next(), words.next()) {
                (Some("version"), None, _) => version = Some(rhs.to_string()),
                (Some("canny_low"), None, _) => canny.low = parse_f64(rhs).map_err(at)?,
                (Some("canny_high"), None, _) => canny.high = parse_f64(rhs).map_err(at)?,
                (Some("ratio"), Some(name), None) => ratios.push(RatioDef::parse(name, rhs).map_err(at)?),
                (Some("window"), Some(name), None) => windows.push(parse_window(name, rhs).map_err(at)?),
                _ => return Err(at(Error::Config(format!("unknown key `{lhs}`")))),
            }
        }
        canny.validate()?;
        let version = version.ok_or_else(|| Error::Config("geometry config lacks `version`".into()))?;
        let mut seen = HashSet::new();
        for name in ratios.iter().map(|r| &r.name).chain(windows.iter().map(|w| &w.name)) {
            if !seen.insert(name.clone()) {
                return Err(Error::Config(format!("geometry config defines `{name}` twice")));
            }
        }
        Ok(Self {
            version,
            ratios,
            windows,
            canny,
        })
    }

    /// Feature names in output order for the given number of windows.
    pub fn feature_names(&self, with_windows: bool) -> Vec<String> {
        let mut names: Vec<String> = self.ratios.iter().map(|r| format!("ratio:{}", r.name)).collect();
        names.extend(pairwise::pairs().map(|(i, j)| format!("dist:{i}-{j}")));
        names.extend(pairwise::pairs().map(|(i, j)| format!("orient:{i}-{j}")));
        if with_windows {
            for w in &self.windows {
                for part in ["smoothness", "hue", "saturation", "value"] {
                    names.push(format!("{}:{part}", w.name));
                }
            }
        }
        names
    }

    /// Builds the feature vector. Window features are included only when an
    /// image is supplied.
    pub fn assemble(&self, lm: &LandmarkSet, image: Option<&ImagePatch>) -> Result<GeomFeatureVector> {
        let windows: &[WindowSpec] = if image.is_some() { &self.windows } else { &[] };
        assemble_geom_features(lm, image, windows, &self.ratios, self.canny)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("expected a number, found `{s}`")))
}

fn parse_window(name: &str, spec: &str) -> Result<WindowSpec> {
    let mut anchors = None;
    let mut offset = None;
    let mut size = None;
    for part in spec.split(';') {
        let mut words = part.split_whitespace();
        let key = words.next().unwrap_or("");
        let vals: Vec<&str> = words.collect();
        match key {
            "anchors" => {
                let a = vals
                    .iter()
                    .map(|v| v.parse::<usize>().ok().filter(|&i| i < NUM_LANDMARKS))
                    .collect::<Option<Vec<_>>>()
                    .filter(|a| !a.is_empty())
                    .ok_or_else(|| Error::Config(format!("window {name}: bad anchors")))?;
                anchors = Some(a);
            }
            "offset" if vals.len() == 2 => offset = Some((parse_f64(vals[0])?, parse_f64(vals[1])?)),
            "size" if vals.len() == 1 => size = Some(parse_f64(vals[0])?),
            _ => return Err(Error::Config(format!("window {name}: cannot parse `{}`", part.trim()))),
        }
    }
    let size = size.ok_or_else(|| Error::Config(format!("window {name}: missing size")))?;
    if size <= 0.0 {
        return Err(Error::Config(format!("window {name}: size must be positive")));
    }
    Ok(WindowSpec {
        name: name.to_string(),
        anchors: anchors.ok_or_else(|| Error::Config(format!("window {name}: missing anchors")))?,
        offset: offset.unwrap_or((0.0, 0.0)),
        size,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomFeatureVector {
    pub values: Vec<f64>,
    pub names: Vec<String>,
    /// Indices (into `values`) of orientations whose landmark pair coincided.
    pub degenerate: Vec<usize>,
}

pub fn assemble_geom_features(
    lm: &LandmarkSet,
    image: Option<&ImagePatch>,
    windows: &[WindowSpec],
    ratio_defs: &[RatioDef],
    canny: CannyThresholds,
) -> Result<GeomFeatureVector> {
    let mut values = named_ratios(lm, ratio_defs)?;
    let mut names: Vec<String> = ratio_defs.iter().map(|r| format!("ratio:{}", r.name)).collect();

    values.extend(pairwise_distances(lm));
    names.extend(pairwise::pairs().map(|(i, j)| format!("dist:{i}-{j}")));

    let orient_base = values.len();
    let (orient, coincident) = pairwise_orientations(lm);
    values.extend(orient);
    names.extend(pairwise::pairs().map(|(i, j)| format!("orient:{i}-{j}")));
    let degenerate = coincident.into_iter().map(|k| orient_base + k).collect();

    if !windows.is_empty() {
        let image = image.ok_or_else(|| Error::NotFound("image required for skin windows".into()))?;
        for w in windows {
            let (x0, y0, ww, hh) = w.resolve(lm, image.width(), image.height())?;
            let patch = image.crop(x0, y0, ww, hh)?;
            let (h, s, v) = skin_color_hsv(&patch);
            values.extend([smoothness(&patch, canny), h, s, v]);
            for part in ["smoothness", "hue", "saturation", "value"] {
                names.push(format!("{}:{part}", w.name));
            }
        }
    }
    Ok(GeomFeatureVector {
        values,
        names,
        degenerate,
    })
}

/// Geometric features for a whole landmark file.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomBatch {
    pub matrix: EmbeddingMatrix,
    pub names: Vec<String>,
    /// Faces left out, with the reason.
    pub excluded: Vec<(FaceId, String)>,
}

/// Assembles one row per face, in face-id order. With `images_dir`, each
/// face's patch is read from `<images_dir>/<face_id>.ppm` and the skin
/// windows are included; faces without a readable patch, or whose geometry
/// is degenerate, are excluded and reported.
pub fn geom_feature_matrix(
    landmarks: &BTreeMap<FaceId, LandmarkSet>,
    images_dir: Option<&Path>,
    config: &GeomConfig,
) -> Result<GeomBatch> {
    let rows: Vec<(FaceId, Result<Vec<f64>>)> = landmarks
        .par_iter()
        .map(|(face, lm)| {
            let row = match images_dir {
                Some(dir) => ImagePatch::load_ppm(dir.join(format!("{face}.ppm")))
                    .and_then(|img| config.assemble(lm, Some(&img))),
                None => config.assemble(lm, None),
            };
            (face.clone(), row.map(|f| f.values))
        })
        .collect();
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut excluded = Vec::new();
    for (face, row) in rows {
        match row {
            Ok(v) => {
                ids.push(face);
                values.push(v);
            }
            Err(e) => {
                log::warn!("face {face} excluded from geometric features: {e}");
                excluded.push((face, e.to_string()));
            }
        }
    }
    if ids.is_empty() {
        return Err(Error::Data("no face produced geometric features".into()));
    }
    Ok(GeomBatch {
        matrix: EmbeddingMatrix::from_rows(GEOM_LAYER, ids, &values)?,
        names: config.feature_names(images_dir.is_some()),
        excluded,
    })
}

/// Mirror-symmetric reference face about x = 100 with a square jaw, in a
/// 200 x 220 pixel frame.
pub fn template_landmarks() -> LandmarkSet {
    let mut p = vec![[0.0, 0.0]; NUM_LANDMARKS];
    // jaw: straight sides then a flat chin
    let jaw_left = [
        [40.0, 80.0],
        [40.0, 100.0],
        [40.0, 120.0],
        [42.0, 140.0],
        [46.0, 160.0],
        [55.0, 175.0],
        [70.0, 185.0],
        [85.0, 190.0],
    ];
    for (i, &[x, y]) in jaw_left.iter().enumerate() {
        p[i] = [x, y];
        p[16 - i] = [200.0 - x, y];
    }
    p[8] = [100.0, 192.0];
    let brow = [[55.0, 70.0], [63.0, 65.0], [72.0, 63.0], [81.0, 65.0], [90.0, 68.0]];
    for (k, &[x, y]) in brow.iter().enumerate() {
        p[17 + k] = [x, y];
        p[26 - k] = [200.0 - x, y];
    }
    for (k, y) in [70.0, 85.0, 100.0, 112.0].iter().enumerate() {
        p[27 + k] = [100.0, *y];
    }
    p[31] = [88.0, 120.0];
    p[32] = [94.0, 122.0];
    p[33] = [100.0, 124.0];
    p[34] = [106.0, 122.0];
    p[35] = [112.0, 120.0];
    let eye = [[60.0, 85.0], [66.0, 81.0], [74.0, 81.0], [80.0, 85.0], [74.0, 88.0], [66.0, 88.0]];
    let mirror_eye = [45, 44, 43, 42, 47, 46];
    for (k, &[x, y]) in eye.iter().enumerate() {
        p[36 + k] = [x, y];
        p[mirror_eye[k]] = [200.0 - x, y];
    }
    let outer = [[78.0, 150.0], [85.0, 145.0], [93.0, 142.0], [100.0, 143.0]];
    for (k, &[x, y]) in outer.iter().enumerate() {
        p[48 + k] = [x, y];
        p[54 - k] = [200.0 - x, y];
    }
    let lower = [[93.0, 156.0], [100.0, 158.0]];
    p[59] = [85.0, 154.0];
    p[55] = [115.0, 154.0];
    p[58] = lower[0];
    p[56] = [107.0, 156.0];
    p[57] = lower[1];
    p[60] = [82.0, 150.0];
    p[64] = [118.0, 150.0];
    p[61] = [92.0, 148.0];
    p[63] = [108.0, 148.0];
    p[62] = [100.0, 148.0];
    p[67] = [92.0, 152.0];
    p[65] = [108.0, 152.0];
    p[66] = [100.0, 152.0];
    LandmarkSet::new(p).expect("template has 68 finite points")
}
