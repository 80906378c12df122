//! Deterministic synthetic datasets in the documented file formats.
//!
//! Each face has a latent vector `l ~ N(0, I_q)`. Attribute `a` has a unit
//! loading vector `c_a`, so its true score `t_a = l . c_a` has unit variance
//! and attributes sharing latent directions are correlated. A rating is
//!
//! ```text
//! clamp(round(5 + signal_sd * t_a + rater_noise_sd * e), 1, 9),   e ~ N(0, 1)
//! ```
//!
//! Embedding rows are `l M + feature_noise * E` with a fixed random `q x d`
//! mixing matrix, so targets are linear in the features up to noise.
//! Landmarks are the reference template deformed by fixed displacement fields
//! weighted by `l`, plus jitter and a random similarity transform.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{save_landmarks, Attribute, FaceId, LandmarkSet, RatingsTable};
use crate::error::{Error, Result};
use crate::femb::EmbeddingMatrix;
use crate::geom::template_landmarks;
use crate::rng::{derive_seed, SplitMix64};

const LATENT: u64 = 1;
const LOADINGS: u64 = 2;
const MIXING: u64 = 3;
const FEATURE_NOISE: u64 = 4;
const RATINGS: u64 = 5;
const LANDMARKS: u64 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_faces: usize,
    pub n_raters: usize,
    pub attributes: Vec<String>,
    pub latent_dim: usize,
    pub feature_dim: usize,
    pub feature_noise: f64,
    pub signal_sd: f64,
    pub rater_noise_sd: f64,
    /// Displacement (pixels) of the landmark deformation per latent unit.
    pub landmark_signal: f64,
    pub landmark_jitter: f64,
    pub layer_name: String,
    pub seed: u64,
}

impl SynthSpec {
    /// Small bundle for examples and end-to-end tests: 120 faces, 15 raters,
    /// 5 attributes, 48-dimensional embeddings.
    pub fn toy() -> Self {
        Self {
            n_faces: 120,
            n_raters: 15,
            attributes: ["attractive", "trustworthy", "aggressive", "happy", "intelligent"]
                .map(String::from)
                .to_vec(),
            latent_dim: 4,
            feature_dim: 48,
            feature_noise: 0.3,
            signal_sd: 1.0,
            rater_noise_sd: 1.5,
            landmark_signal: 0.6,
            landmark_jitter: 1.0,
            layer_name: "synthetic_conv".into(),
            seed: 2017,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthBundle {
    pub faces: Vec<FaceId>,
    pub attributes: Vec<Attribute>,
    pub ratings: RatingsTable,
    pub embeddings: EmbeddingMatrix,
    pub landmarks: BTreeMap<FaceId, LandmarkSet>,
    /// Unit-variance true score per attribute, in face order.
    pub true_scores: Vec<Vec<f64>>,
}

fn gaussian_matrix(rng: &mut SplitMix64, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.next_gaussian()).collect()).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthBundle> {
    if spec.n_faces == 0 || spec.n_raters == 0 || spec.latent_dim == 0 || spec.feature_dim == 0 {
        return Err(Error::Config("synthetic spec sizes must be positive".into()));
    }
    let q = spec.latent_dim;
    let faces: Vec<FaceId> = (0..spec.n_faces)
        .map(|i| FaceId::new(format!("face{i:04}")))
        .collect::<Result<_>>()?;
    let attributes: Vec<Attribute> = spec.attributes.iter().map(Attribute::new).collect::<Result<_>>()?;

    let latent = gaussian_matrix(&mut SplitMix64::new(derive_seed(spec.seed, &[LATENT])), spec.n_faces, q);

    let mut rng = SplitMix64::new(derive_seed(spec.seed, &[LOADINGS]));
    let loadings: Vec<Vec<f64>> = (0..attributes.len())
        .map(|_| {
            let v: Vec<f64> = (0..q).map(|_| rng.next_gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let true_scores: Vec<Vec<f64>> = loadings
        .iter()
        .map(|c| latent.iter().map(|l| l.iter().zip(c).map(|(a, b)| a * b).sum()).collect())
        .collect();

    let mixing = gaussian_matrix(&mut SplitMix64::new(derive_seed(spec.seed, &[MIXING])), q, spec.feature_dim);
    let scale = 1.0 / (q as f64).sqrt();
    let mut noise = SplitMix64::new(derive_seed(spec.seed, &[FEATURE_NOISE]));
    let rows: Vec<Vec<f64>> = latent
        .iter()
        .map(|l| {
            (0..spec.feature_dim)
                .map(|j| {
                    let signal: f64 = (0..q).map(|k| l[k] * mixing[k][j]).sum::<f64>() * scale;
                    signal + spec.feature_noise * noise.next_gaussian()
                })
                .collect()
        })
        .collect();
    let embeddings = EmbeddingMatrix::from_rows(spec.layer_name.clone(), faces.clone(), &rows)?;

    let mut ratings = RatingsTable::new();
    for (a, attr) in attributes.iter().enumerate() {
        let mut rng = SplitMix64::new(derive_seed(spec.seed, &[RATINGS, a as u64]));
        for (i, face) in faces.iter().enumerate() {
            let mean = 5.0 + spec.signal_sd * true_scores[a][i];
            for r in 0..spec.n_raters {
                let score = (mean + spec.rater_noise_sd * rng.next_gaussian()).round().clamp(1.0, 9.0) as u8;
                ratings.insert(face.clone(), attr.clone(), format!("r{r:02}"), score)?;
            }
        }
    }

    let landmarks = synth_landmarks(spec, &faces, &latent)?;
    Ok(SynthBundle {
        faces,
        attributes,
        ratings,
        embeddings,
        landmarks,
        true_scores,
    })
}

fn synth_landmarks(
    spec: &SynthSpec,
    faces: &[FaceId],
    latent: &[Vec<f64>],
) -> Result<BTreeMap<FaceId, LandmarkSet>> {
    let template = template_landmarks();
    let mut rng = SplitMix64::new(derive_seed(spec.seed, &[LANDMARKS]));
    let fields: Vec<Vec<[f64; 2]>> = (0..spec.latent_dim)
        .map(|_| {
            (0..template.points().len())
                .map(|_| [rng.next_gaussian(), rng.next_gaussian()])
                .collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    for (face, l) in faces.iter().zip(latent) {
        let angle = 0.1 * rng.next_gaussian();
        let s = 1.0 + 0.05 * rng.next_gaussian();
        let (tx, ty) = (5.0 * rng.next_gaussian(), 5.0 * rng.next_gaussian());
        let (sin, cos) = angle.sin_cos();
        let points = template
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut x = p[0] + spec.landmark_jitter * rng.next_gaussian();
                let mut y = p[1] + spec.landmark_jitter * rng.next_gaussian();
                for (k, field) in fields.iter().enumerate() {
                    x += spec.landmark_signal * l[k] * field[i][0];
                    y += spec.landmark_signal * l[k] * field[i][1];
                }
                let (cx, cy) = (x - 100.0, y - 110.0);
                [100.0 + tx + s * (cos * cx - sin * cy), 110.0 + ty + s * (sin * cx + cos * cy)]
            })
            .collect();
        out.insert(face.clone(), LandmarkSet::new(points)?);
    }
    Ok(out)
}

/// Paths of a bundle written by [`write_bundle`].
#[derive(Debug, Clone, PartialEq)]
pub struct BundlePaths {
    pub ratings: PathBuf,
    pub landmarks: PathBuf,
    pub embeddings: PathBuf,
    pub config: PathBuf,
}

/// Writes `ratings.csv`, `landmarks.csv`, `<layer>.femb` and an
/// `experiment.toml` that evaluates both the geometric baseline and the
/// embeddings.
pub fn write_bundle(bundle: &SynthBundle, dir: &Path, repeats: usize, seed: u64) -> Result<BundlePaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let layer = bundle.embeddings.layer_name();
    let paths = BundlePaths {
        ratings: dir.join("ratings.csv"),
        landmarks: dir.join("landmarks.csv"),
        embeddings: dir.join(format!("{layer}.femb")),
        config: dir.join("experiment.toml"),
    };
    bundle.ratings.save(&paths.ratings)?;
    save_landmarks(&bundle.landmarks, &paths.landmarks)?;
    bundle.embeddings.save(&paths.embeddings)?;

    let attrs: Vec<String> = bundle.attributes.iter().map(|a| format!("\"{a}\"")).collect();
    let mut cfg = String::new();
    let _ = writeln!(cfg, "ratings = \"ratings.csv\"");
    let _ = writeln!(cfg, "landmarks = \"landmarks.csv\"");
    let _ = writeln!(cfg, "embeddings = [\"{layer}.femb\"]");
    let _ = writeln!(cfg, "attributes = [{}]", attrs.join(", "));
    let _ = writeln!(cfg, "seed = {seed}");
    let _ = writeln!(cfg, "repeats = {repeats}");
    let _ = writeln!(cfg, "pca_dims = [4, 8, 16, 32]");
    let _ = writeln!(cfg, "lambda_min = 1e-3");
    let _ = writeln!(cfg, "lambda_max = 1e4");
    let _ = writeln!(cfg, "lambda_count = 15");
    fs::write(&paths.config, cfg).map_err(|e| Error::io(&paths.config, e))?;
    Ok(paths)
}
