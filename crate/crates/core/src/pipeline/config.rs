//! Experiment configuration file (TOML).
//!
//! ```toml
//! ratings = "ratings.csv"          # required
//! seed = 2017                      # required; FACET_SEED overrides
//! attributes = ["attractive", "trustworthy"]
//! embeddings = ["conv5_2.femb"]
//! landmarks = "landmarks.csv"      # geometric baseline computed in-process
//! images_dir = "patches"           # optional PPM skin patches, <face>.ppm
//! geom_config = "geom-v1.conf"     # optional, shipped geom-v1 by default
//! geom_features = "geom.femb"      # alternative to `landmarks`
//! pca_dims = [8, 16, 32, 64, 128, 256]
//! lambdas = [0.01, 1.0, 100.0]     # or lambda_min / lambda_max / lambda_count
//! repeats = 50
//! split = [0.64, 0.16, 0.20]
//! standardize = false
//! ```
//!
//! Relative paths resolve against the config file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::data::Attribute;
use crate::error::{Error, Result};
use crate::ridge::LambdaGrid;
use crate::split::SplitFractions;

pub const DEFAULT_PCA_DIMS: [usize; 6] = [8, 16, 32, 64, 128, 256];
pub const SEED_ENV: &str = "FACET_SEED";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    ratings: PathBuf,
    seed: u64,
    attributes: Option<Vec<String>>,
    #[serde(default)]
    embeddings: Vec<PathBuf>,
    landmarks: Option<PathBuf>,
    images_dir: Option<PathBuf>,
    geom_config: Option<PathBuf>,
    geom_features: Option<PathBuf>,
    pca_dims: Option<Vec<usize>>,
    lambdas: Option<Vec<f64>>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    lambda_count: Option<usize>,
    repeats: Option<usize>,
    split: Option<[f64; 3]>,
    #[serde(default)]
    standardize: bool,
}

/// Where the master seed came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Config,
    Environment,
}

/// Model-selection settings shared by every `train_one` call.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub pca_dims: Vec<usize>,
    pub lambdas: LambdaGrid,
    pub standardize: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            pca_dims: DEFAULT_PCA_DIMS.to_vec(),
            lambdas: LambdaGrid::default(),
            standardize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ratings: PathBuf,
    pub attributes: Vec<Attribute>,
    pub embeddings: Vec<PathBuf>,
    pub landmarks: Option<PathBuf>,
    pub images_dir: Option<PathBuf>,
    pub geom_config: Option<PathBuf>,
    pub geom_features: Option<PathBuf>,
    pub selection: SelectionConfig,
    pub repeats: usize,
    pub fractions: SplitFractions,
    pub seed: u64,
    pub seed_source: SeedSource,
    /// Hex SHA-256 of the config text.
    pub hash: String,
}

impl ExperimentConfig {
    /// Reads and validates a config file; `seed_override` replaces the
    /// configured seed (normally taken from `FACET_SEED`).
    pub fn load(path: impl AsRef<Path>, seed_override: Option<u64>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, seed_override)
    }

    pub fn parse(text: &str, base: &Path, seed_override: Option<u64>) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let attributes = match raw.attributes {
            Some(list) => list.into_iter().map(Attribute::new).collect::<Result<Vec<_>>>()?,
            None => Attribute::defaults(),
        };
        if attributes.is_empty() {
            return Err(Error::Config("`attributes` is empty".into()));
        }
        for (i, a) in attributes.iter().enumerate() {
            if attributes[..i].contains(a) {
                return Err(Error::Config(format!("attribute `{a}` listed twice")));
            }
        }

        let pca_dims = raw.pca_dims.unwrap_or_else(|| DEFAULT_PCA_DIMS.to_vec());
        if pca_dims.is_empty() || pca_dims.contains(&0) {
            return Err(Error::Config("`pca_dims` must be nonempty and positive".into()));
        }
        let lambdas = match (raw.lambdas, raw.lambda_min, raw.lambda_max, raw.lambda_count) {
            (Some(_), Some(_), _, _) | (Some(_), _, Some(_), _) | (Some(_), _, _, Some(_)) => {
                return Err(Error::Config(
                    "give either `lambdas` or `lambda_min`/`lambda_max`/`lambda_count`".into(),
                ))
            }
            (Some(v), None, None, None) => LambdaGrid::new(v)?,
            (None, min, max, count) => LambdaGrid::log_spaced(
                min.unwrap_or(1e-4),
                max.unwrap_or(1e4),
                count.unwrap_or(25),
            )?,
        };

        let repeats = raw.repeats.unwrap_or(50);
        if repeats == 0 {
            return Err(Error::Config("`repeats` must be at least 1".into()));
        }
        let fractions = match raw.split {
            Some([a, b, c]) => SplitFractions::new(a, b, c)?,
            None => SplitFractions::default(),
        };
        if raw.landmarks.is_some() && raw.geom_features.is_some() {
            return Err(Error::Config("give either `landmarks` or `geom_features`, not both".into()));
        }
        if raw.landmarks.is_none() && (raw.images_dir.is_some() || raw.geom_config.is_some()) {
            return Err(Error::Config("`images_dir` and `geom_config` require `landmarks`".into()));
        }

        let config = Self {
            ratings: resolve(raw.ratings),
            attributes,
            embeddings: raw.embeddings.into_iter().map(resolve).collect(),
            landmarks: raw.landmarks.map(resolve),
            images_dir: raw.images_dir.map(resolve),
            geom_config: raw.geom_config.map(resolve),
            geom_features: raw.geom_features.map(resolve),
            selection: SelectionConfig {
                pca_dims,
                lambdas,
                standardize: raw.standardize,
            },
            repeats,
            fractions,
            seed: seed_override.unwrap_or(raw.seed),
            seed_source: if seed_override.is_some() {
                SeedSource::Environment
            } else {
                SeedSource::Config
            },
            hash: hex::encode(Sha256::digest(text.as_bytes())),
        };
        config.check_files()?;
        Ok(config)
    }

    fn check_files(&self) -> Result<()> {
        let files = std::iter::once(&self.ratings)
            .chain(&self.embeddings)
            .chain(&self.landmarks)
            .chain(&self.geom_config)
            .chain(&self.geom_features);
        for f in files {
            if !f.is_file() {
                return Err(Error::Config(format!("file not found: {}", f.display())));
            }
        }
        if let Some(dir) = &self.images_dir {
            if !dir.is_dir() {
                return Err(Error::Config(format!("directory not found: {}", dir.display())));
            }
        }
        Ok(())
    }

    /// Whether a geometric (Baseline II) source is configured.
    pub fn has_geometry(&self) -> bool {
        self.landmarks.is_some() || self.geom_features.is_some()
    }
}

/// Reads the seed override from `FACET_SEED`, if set.
pub fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}
