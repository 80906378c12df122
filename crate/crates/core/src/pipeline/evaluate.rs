//! Repeated train / validation / test evaluation against both baselines.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SelectionConfig, SeedSource};
use super::predictor::{out_of_range_fraction, predict_faces, TrainedPredictor};
use super::train::{train_cached, FaceSplit, FeatureIndex, PcaCache};
use crate::data::{average_ratings, load_landmarks, Attribute, FaceId, RatingsTable};
use crate::error::{Error, Result};
use crate::eval::{
    attribute_heatmap, heatmap_similarity, mean, pearson, sample_stddev, split_half_consistency, AttributeHeatmap,
    ConsistencyResult,
};
use crate::femb::EmbeddingMatrix;
use crate::geom::{geom_feature_matrix, GeomConfig};
use crate::rng::{derive_seed, fnv1a};
use crate::split::{make_split_of, SplitFractions, SplitSpec};

/// Tag for the rater-split (Baseline I) seed stream.
const BASELINE_STREAM: u64 = 0x4241_5345_4c49_4e45;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceRole {
    /// Hand-crafted geometric features (Baseline II).
    Geometry,
    /// Network embeddings (the model).
    Embedding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSource {
    pub role: SourceRole,
    pub matrix: EmbeddingMatrix,
}

impl FeatureSource {
    pub fn name(&self) -> &str {
        self.matrix.layer_name()
    }
}

/// Everything an evaluation reads, already loaded.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub ratings: RatingsTable,
    pub sources: Vec<FeatureSource>,
    /// Faces dropped while computing geometric features in-process.
    pub geom_excluded: Vec<(FaceId, String)>,
}

impl ExperimentData {
    pub fn load(config: &ExperimentConfig) -> Result<Self> {
        let ratings = RatingsTable::load(&config.ratings)?;
        let mut sources = Vec::new();
        let mut geom_excluded = Vec::new();
        if let Some(path) = &config.landmarks {
            let landmarks = load_landmarks(path)?;
            let geom = match &config.geom_config {
                Some(p) => GeomConfig::load(p)?,
                None => GeomConfig::default(),
            };
            let batch = geom_feature_matrix(&landmarks, config.images_dir.as_deref(), &geom)?;
            geom_excluded = batch.excluded;
            sources.push(FeatureSource {
                role: SourceRole::Geometry,
                matrix: batch.matrix,
            });
        }
        if let Some(path) = &config.geom_features {
            sources.push(FeatureSource {
                role: SourceRole::Geometry,
                matrix: EmbeddingMatrix::load(path)?,
            });
        }
        for path in &config.embeddings {
            sources.push(FeatureSource {
                role: SourceRole::Embedding,
                matrix: EmbeddingMatrix::load(path)?,
            });
        }
        let data = Self {
            ratings,
            sources,
            geom_excluded,
        };
        data.check_sources()?;
        Ok(data)
    }

    fn check_sources(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::Config("no feature sources configured".into()));
        }
        for (i, s) in self.sources.iter().enumerate() {
            if self.sources[..i].iter().any(|o| o.name() == s.name()) {
                return Err(Error::Config(format!("two feature sources share the name `{}`", s.name())));
            }
        }
        Ok(())
    }

    /// Faces present in every feature source and in the ratings table,
    /// sorted.
    pub fn common_faces(&self) -> Vec<FaceId> {
        let rated = self.ratings.faces();
        rated
            .into_iter()
            .filter(|f| self.sources.iter().all(|s| s.matrix.index_of(f).is_some()))
            .collect()
    }
}

/// The evaluation-relevant part of an experiment config.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub attributes: Vec<Attribute>,
    pub selection: SelectionConfig,
    pub repeats: usize,
    pub fractions: SplitFractions,
    pub seed: u64,
}

impl EvalSettings {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            attributes: config.attributes.clone(),
            selection: config.selection.clone(),
            repeats: config.repeats,
            fractions: config.fractions,
            seed: config.seed,
        }
    }
}

/// Per-repeat values of one (attribute, source) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceCell {
    pub test_pearson: Vec<f64>,
    pub out_of_range: Vec<f64>,
}

pub type CellOutcome<T> = std::result::Result<T, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub tool_version: String,
    pub config_hash: Option<String>,
    pub master_seed: u64,
    pub seed_source: SeedSource,
    pub repeats: usize,
    pub fractions: SplitFractions,
    pub pca_dims: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub standardize: bool,
    /// (name, faces, dimension) per source.
    pub sources: Vec<(String, usize, usize)>,
    pub common_faces: usize,
    pub geom_excluded: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub attributes: Vec<Attribute>,
    pub sources: Vec<(String, SourceRole)>,
    pub repeats: usize,
    /// Baseline I per attribute.
    pub baseline1: Vec<CellOutcome<ConsistencyResult>>,
    /// `[attribute][source]`.
    pub cells: Vec<Vec<CellOutcome<SourceCell>>>,
    /// Per source, one human-vs-model heatmap similarity per repeat.
    pub heatmap_similarity: Vec<CellOutcome<Vec<f64>>>,
    /// Human heatmap over every common face with all attributes rated.
    pub human_heatmap: Option<AttributeHeatmap>,
    /// Heatmap of the primary model's repeat-0 test predictions.
    pub model_heatmap: Option<AttributeHeatmap>,
    /// Embedding source with the best mean test correlation across attributes.
    pub primary_model: Option<String>,
    pub provenance: Provenance,
}

impl EvalReport {
    pub fn source_index(&self, name: &str) -> Option<usize> {
        self.sources.iter().position(|(n, _)| n == name)
    }

    /// First geometric source, used as Baseline II.
    pub fn geometry_source(&self) -> Option<usize> {
        self.sources.iter().position(|(_, r)| *r == SourceRole::Geometry)
    }

    pub fn cell(&self, attribute: &Attribute, source: &str) -> Option<&CellOutcome<SourceCell>> {
        let a = self.attributes.iter().position(|x| x == attribute)?;
        Some(&self.cells[a][self.source_index(source)?])
    }

    /// Every (cell, reason) that failed, as `(attribute, source, reason)`.
    pub fn failures(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (a, attr) in self.attributes.iter().enumerate() {
            if let Err(e) = &self.baseline1[a] {
                out.push((attr.to_string(), "human".to_string(), e.clone()));
            }
            for (s, (name, _)) in self.sources.iter().enumerate() {
                if let Err(e) = &self.cells[a][s] {
                    out.push((attr.to_string(), name.clone(), e.clone()));
                }
            }
        }
        for (s, (name, _)) in self.sources.iter().enumerate() {
            if let Err(e) = &self.heatmap_similarity[s] {
                out.push(("*".to_string(), name.clone(), e.clone()));
            }
        }
        out
    }
}

struct RepeatOutcome {
    /// `[attribute][source]` -> (test Pearson, out-of-range fraction)
    cells: Vec<Vec<CellOutcome<(f64, f64)>>>,
    similarity: Vec<CellOutcome<f64>>,
    model_heatmaps: Vec<Option<AttributeHeatmap>>,
}

/// Restricts each partition to faces with a target.
fn with_targets(faces: &[FaceId], targets: &BTreeMap<FaceId, f64>) -> Vec<FaceId> {
    faces.iter().filter(|f| targets.contains_key(*f)).cloned().collect()
}

/// Heatmaps of human targets and model predictions on the faces that have
/// both for every attribute that trained.
fn repeat_heatmaps(
    attributes: &[Attribute],
    targets: &[CellOutcome<BTreeMap<FaceId, f64>>],
    predictions: &[Option<BTreeMap<FaceId, f64>>],
    test: &[FaceId],
) -> std::result::Result<(AttributeHeatmap, AttributeHeatmap), String> {
    let used: Vec<usize> = (0..attributes.len()).filter(|&a| predictions[a].is_some()).collect();
    if used.len() < 3 {
        return Err(format!("heatmap similarity needs 3 trained attributes, have {}", used.len()));
    }
    let faces: Vec<&FaceId> = test
        .iter()
        .filter(|f| used.iter().all(|&a| predictions[a].as_ref().unwrap().contains_key(*f)))
        .collect();
    let mut human = Vec::new();
    let mut model = Vec::new();
    for &a in &used {
        let t = targets[a].as_ref().expect("trained attributes have targets");
        let p = predictions[a].as_ref().unwrap();
        human.push((attributes[a].clone(), faces.iter().map(|f| t[*f]).collect()));
        model.push((attributes[a].clone(), faces.iter().map(|f| p[*f]).collect()));
    }
    let h = attribute_heatmap(&human).map_err(|e| e.to_string())?;
    let m = attribute_heatmap(&model).map_err(|e| e.to_string())?;
    Ok((h, m))
}

/// One repeat's (test Pearson, out-of-range fraction) and test predictions.
type RepeatCell = (CellOutcome<(f64, f64)>, Option<BTreeMap<FaceId, f64>>);

/// Runs every repeat: one shared face split per repeat, one predictor per
/// attribute and feature source, scored by Pearson on the test faces.
/// Baseline I is computed once per attribute on its own seed stream. Cells
/// that fail in any repeat are reported as failed; others are unaffected.
pub fn evaluate_repeats(settings: &EvalSettings, data: &ExperimentData) -> Result<EvalReport> {
    data.check_sources()?;
    if settings.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let universe = data.common_faces();
    let n_sources = data.sources.len();
    log::info!(
        "evaluating {} attributes x {} sources over {} repeats on {} faces",
        settings.attributes.len(),
        n_sources,
        settings.repeats,
        universe.len()
    );

    let targets: Vec<CellOutcome<BTreeMap<FaceId, f64>>> = settings
        .attributes
        .iter()
        .map(|a| average_ratings(&data.ratings, a).map_err(|e| e.to_string()))
        .collect();

    let baseline1: Vec<CellOutcome<ConsistencyResult>> = settings
        .attributes
        .par_iter()
        .map(|a| {
            let seed = derive_seed(settings.seed, &[BASELINE_STREAM, fnv1a(a.as_str().as_bytes())]);
            split_half_consistency(&data.ratings, a, settings.repeats, seed).map_err(|e| e.to_string())
        })
        .collect();

    let indexes: Vec<FeatureIndex> = data.sources.iter().map(|s| FeatureIndex::new(&s.matrix)).collect();

    let outcomes: Vec<RepeatOutcome> = (0..settings.repeats)
        .into_par_iter()
        .map(|rep| -> Result<RepeatOutcome> {
            let spec = SplitSpec {
                seed: settings.seed,
                fractions: settings.fractions,
                repeat_index: rep as u32,
            };
            let (train, validation, test) = make_split_of(&universe, &spec)?;
            // [source][attribute]; attributes run in order so each source's
            // PCA cache is shared across attributes with the same train set
            let per_source: Vec<Vec<RepeatCell>> = (0..n_sources)
                .into_par_iter()
                .map(|s| {
                    let mut cache = PcaCache::new();
                    settings
                        .attributes
                        .iter()
                        .zip(&targets)
                        .map(|(attr, t)| {
                            let t = match t {
                                Ok(t) => t,
                                Err(e) => return (Err(e.clone()), None),
                            };
                            let split = FaceSplit {
                                train: with_targets(&train, t),
                                validation: with_targets(&validation, t),
                                test: with_targets(&test, t),
                                master_seed: settings.seed,
                                repeat_index: rep as u32,
                            };
                            let mut run = || -> Result<((f64, f64), BTreeMap<FaceId, f64>)> {
                                let p = train_cached(&indexes[s], t, attr, &settings.selection, &split, &mut cache)?;
                                let pred = predict_faces(&p, &data.sources[s].matrix, &split.test)?;
                                let yhat: Vec<f64> = split.test.iter().map(|f| pred[f]).collect();
                                let y: Vec<f64> = split.test.iter().map(|f| t[f]).collect();
                                let r = pearson(&yhat, &y)?.r;
                                Ok(((r, out_of_range_fraction(&yhat)), pred))
                            };
                            match run() {
                                Ok((v, pred)) => (Ok(v), Some(pred)),
                                Err(e) => (Err(format!("repeat {rep}: {e}")), None),
                            }
                        })
                        .collect()
                })
                .collect();

            let mut cells: Vec<Vec<CellOutcome<(f64, f64)>>> = vec![Vec::with_capacity(n_sources); settings.attributes.len()];
            let mut preds: Vec<Vec<Option<BTreeMap<FaceId, f64>>>> = Vec::with_capacity(n_sources);
            for column in per_source {
                let mut source_preds = Vec::with_capacity(column.len());
                for (a, (cell, pred)) in column.into_iter().enumerate() {
                    cells[a].push(cell);
                    source_preds.push(pred);
                }
                preds.push(source_preds);
            }
            let mut similarity = Vec::with_capacity(n_sources);
            let mut model_heatmaps = Vec::with_capacity(n_sources);
            for p in &preds {
                match repeat_heatmaps(&settings.attributes, &targets, p, &test) {
                    Ok((h, m)) => {
                        similarity.push(heatmap_similarity(&h, &m).map_err(|e| format!("repeat {rep}: {e}")));
                        model_heatmaps.push((rep == 0).then_some(m));
                    }
                    Err(e) => {
                        similarity.push(Err(format!("repeat {rep}: {e}")));
                        model_heatmaps.push(None);
                    }
                }
            }
            Ok(RepeatOutcome {
                cells,
                similarity,
                model_heatmaps,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let cells: Vec<Vec<CellOutcome<SourceCell>>> = (0..settings.attributes.len())
        .map(|a| {
            (0..n_sources)
                .map(|s| {
                    let mut cell = SourceCell {
                        test_pearson: Vec::with_capacity(settings.repeats),
                        out_of_range: Vec::with_capacity(settings.repeats),
                    };
                    for o in &outcomes {
                        let (r, oor) = o.cells[a][s].clone()?;
                        cell.test_pearson.push(r);
                        cell.out_of_range.push(oor);
                    }
                    Ok(cell)
                })
                .collect()
        })
        .collect();
    let heatmap_sim: Vec<CellOutcome<Vec<f64>>> = (0..n_sources)
        .map(|s| outcomes.iter().map(|o| o.similarity[s].clone()).collect())
        .collect();

    let primary = (0..n_sources)
        .filter(|&s| data.sources[s].role == SourceRole::Embedding)
        .filter_map(|s| {
            let means: Vec<f64> = cells
                .iter()
                .filter_map(|row| row[s].as_ref().ok().map(|c| mean(&c.test_pearson)))
                .collect();
            (!means.is_empty()).then(|| (s, mean(&means)))
        })
        .fold(None, |best: Option<(usize, f64)>, (s, m)| match best {
            Some((_, bm)) if bm >= m => best,
            _ => Some((s, m)),
        })
        .map(|(s, _)| s);

    let human_heatmap = {
        let ok: Vec<usize> = (0..settings.attributes.len()).filter(|&a| targets[a].is_ok()).collect();
        let faces: Vec<&FaceId> = universe
            .iter()
            .filter(|f| ok.iter().all(|&a| targets[a].as_ref().unwrap().contains_key(*f)))
            .collect();
        let scores: Vec<(Attribute, Vec<f64>)> = ok
            .iter()
            .map(|&a| {
                let t = targets[a].as_ref().unwrap();
                (settings.attributes[a].clone(), faces.iter().map(|f| t[*f]).collect())
            })
            .collect();
        (!scores.is_empty()).then(|| attribute_heatmap(&scores).ok()).flatten()
    };
    let model_heatmap = primary.and_then(|s| outcomes[0].model_heatmaps[s].clone());

    Ok(EvalReport {
        attributes: settings.attributes.clone(),
        sources: data.sources.iter().map(|s| (s.name().to_string(), s.role)).collect(),
        repeats: settings.repeats,
        baseline1,
        cells,
        heatmap_similarity: heatmap_sim,
        human_heatmap,
        model_heatmap,
        primary_model: primary.map(|s| data.sources[s].name().to_string()),
        provenance: Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: None,
            master_seed: settings.seed,
            seed_source: SeedSource::Config,
            repeats: settings.repeats,
            fractions: settings.fractions,
            pca_dims: settings.selection.pca_dims.clone(),
            lambdas: settings.selection.lambdas.values().to_vec(),
            standardize: settings.selection.standardize,
            sources: data
                .sources
                .iter()
                .map(|s| (s.name().to_string(), s.matrix.n(), s.matrix.d()))
                .collect(),
            common_faces: universe.len(),
            geom_excluded: data.geom_excluded.len(),
        },
    })
}

/// Loads the data named by `config` and evaluates it, recording the config
/// hash and seed origin in the provenance.
pub fn evaluate_config(config: &ExperimentConfig) -> Result<EvalReport> {
    let data = ExperimentData::load(config)?;
    let mut report = evaluate_repeats(&EvalSettings::from_config(config), &data)?;
    report.provenance.config_hash = Some(config.hash.clone());
    report.provenance.seed_source = config.seed_source;
    Ok(report)
}

/// Summary statistics of a per-repeat series.
pub fn summarize(values: &[f64]) -> (f64, f64) {
    (mean(values), sample_stddev(values))
}

/// Trains one predictor per attribute and source on the split of
/// `repeat_index`, as used for the persisted models. Result is
/// `[attribute][source]`.
pub fn train_repeat(
    settings: &EvalSettings,
    data: &ExperimentData,
    repeat_index: u32,
) -> Result<Vec<Vec<CellOutcome<TrainedPredictor>>>> {
    data.check_sources()?;
    let universe = data.common_faces();
    let spec = SplitSpec {
        seed: settings.seed,
        fractions: settings.fractions,
        repeat_index,
    };
    let (train, validation, test) = make_split_of(&universe, &spec)?;
    let indexes: Vec<FeatureIndex> = data.sources.iter().map(|s| FeatureIndex::new(&s.matrix)).collect();
    let targets: Vec<CellOutcome<BTreeMap<FaceId, f64>>> = settings
        .attributes
        .iter()
        .map(|a| average_ratings(&data.ratings, a).map_err(|e| e.to_string()))
        .collect();
    let per_source: Vec<Vec<CellOutcome<TrainedPredictor>>> = indexes
        .par_iter()
        .map(|index| {
            let mut cache = PcaCache::new();
            settings
                .attributes
                .iter()
                .zip(&targets)
                .map(|(attr, t)| {
                    let t = t.as_ref().map_err(Clone::clone)?;
                    let split = FaceSplit {
                        train: with_targets(&train, t),
                        validation: with_targets(&validation, t),
                        test: with_targets(&test, t),
                        master_seed: settings.seed,
                        repeat_index,
                    };
                    train_cached(index, t, attr, &settings.selection, &split, &mut cache).map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<CellOutcome<TrainedPredictor>>> = vec![Vec::new(); settings.attributes.len()];
    for column in per_source {
        for (a, cell) in column.into_iter().enumerate() {
            out[a].push(cell);
        }
    }
    Ok(out)
}
