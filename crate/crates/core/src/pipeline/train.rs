//! Per-attribute training with nested model selection.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use super::config::SelectionConfig;
use super::predictor::{CandidateScore, SelectionRecord, TrainedPredictor};
use crate::data::{Attribute, FaceId};
use crate::error::{Error, Result};
use crate::eval::pearson;
use crate::femb::EmbeddingMatrix;
use crate::reduce::{pca_fit, PcaModel};
use crate::ridge::{loo_curve_with, select_lambda, RidgeModel, RidgeSystem};
use crate::rng::{derive_seed, fnv1a};

/// Faces of one repeat, by identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceSplit {
    pub train: Vec<FaceId>,
    pub validation: Vec<FaceId>,
    pub test: Vec<FaceId>,
    pub master_seed: u64,
    pub repeat_index: u32,
}

/// Seed recorded for one (repeat, attribute) cell.
pub fn attribute_seed(master_seed: u64, repeat_index: u32, attribute: &Attribute) -> u64 {
    derive_seed(master_seed, &[repeat_index as u64, fnv1a(attribute.as_str().as_bytes())])
}

/// Outcome of model selection on in-memory matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedModel {
    pub pca: PcaModel,
    pub ridge: RidgeModel,
    pub candidates: Vec<usize>,
    pub scores: Vec<CandidateScore>,
    pub skipped: Vec<usize>,
}

/// PCA fitted once at the largest usable candidate dimension, with the
/// candidate list it supports.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePca {
    pub pca: PcaModel,
    pub candidates: Vec<usize>,
}

/// Caps the configured dimensions at `min(n_train - 1, d)` (falling back to
/// the cap itself when none fit) and fits the PCA on the training rows.
pub fn fit_candidate_pca(x_train: &DMatrix<f64>, selection: &SelectionConfig) -> Result<CandidatePca> {
    let n = x_train.nrows();
    if n < 2 {
        return Err(Error::Size(format!("need at least 2 training faces, got {n}")));
    }
    let cap = (n - 1).min(x_train.ncols());
    let mut wanted: Vec<usize> = selection.pca_dims.iter().copied().filter(|&k| k <= cap).collect();
    if wanted.is_empty() {
        wanted.push(cap);
    }
    wanted.sort_unstable();
    wanted.dedup();

    let pca = pca_fit(x_train, *wanted.last().unwrap(), selection.standardize)?;
    let available = pca.n_components();
    let mut candidates: Vec<usize> = wanted.into_iter().filter(|&k| k <= available).collect();
    if candidates.is_empty() {
        candidates.push(available);
    }
    Ok(CandidatePca { pca, candidates })
}

/// Fits the PCA, then for each candidate dimension keeps the leading
/// components, picks lambda by leave-one-out on the training rows and scores
/// Pearson on the validation rows. The best candidate wins; ties go to the
/// smaller dimension.
pub fn select_model(
    x_train: &DMatrix<f64>,
    y_train: &DVector<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DVector<f64>,
    selection: &SelectionConfig,
) -> Result<SelectedModel> {
    check_targets(x_train, y_train, x_val)?;
    let fitted = fit_candidate_pca(x_train, selection)?;
    select_with_pca(&fitted, x_train, y_train, x_val, y_val, selection)
}

fn check_targets(x_train: &DMatrix<f64>, y_train: &DVector<f64>, x_val: &DMatrix<f64>) -> Result<()> {
    let n = x_train.nrows();
    if n < 2 {
        return Err(Error::Size(format!("need at least 2 training faces, got {n}")));
    }
    if x_val.nrows() < 2 {
        return Err(Error::Size(format!("need at least 2 validation faces, got {}", x_val.nrows())));
    }
    if y_train.iter().all(|&v| v == y_train[0]) {
        return Err(Error::Degenerate("training target is constant".into()));
    }
    Ok(())
}

/// Model selection with a PCA already fitted on exactly `x_train`.
pub fn select_with_pca(
    fitted: &CandidatePca,
    x_train: &DMatrix<f64>,
    y_train: &DVector<f64>,
    x_val: &DMatrix<f64>,
    y_val: &DVector<f64>,
    selection: &SelectionConfig,
) -> Result<SelectedModel> {
    check_targets(x_train, y_train, x_val)?;
    let full = &fitted.pca;
    let candidates = fitted.candidates.clone();
    let z_train_full = full.transform(x_train)?;
    let z_val_full = full.transform(x_val)?;
    let mut best: Option<(usize, f64, RidgeModel)> = None;
    let mut scores = Vec::new();
    let mut skipped = Vec::new();
    for &k in &candidates {
        let z_train = z_train_full.columns(0, k).into_owned();
        let system = RidgeSystem::new(&z_train, y_train)?;
        let curve = match loo_curve_with(&system, &selection.lambdas) {
            Ok(c) => c,
            Err(Error::Leverage { .. }) => {
                log::debug!("pca dim {k}: leverage-one row, candidate skipped");
                skipped.push(k);
                continue;
            }
            Err(e) => return Err(e),
        };
        let lambda = select_lambda(&curve)?;
        let ridge = system.fit(lambda)?;
        let pred = ridge.predict(&z_val_full.columns(0, k).into_owned())?;
        let r = match pearson(pred.as_slice(), y_val.as_slice()) {
            Ok(c) => c.r,
            Err(Error::Degenerate(_)) => 0.0,
            Err(e) => return Err(e),
        };
        scores.push(CandidateScore {
            dim: k,
            lambda,
            validation_pearson: r,
        });
        if best.as_ref().is_none_or(|(_, br, _)| r > *br) {
            best = Some((k, r, ridge));
        }
    }
    let (k, _, ridge) = best.ok_or_else(|| {
        Error::Degenerate(format!("every PCA candidate {candidates:?} has a leverage-one training row"))
    })?;
    Ok(SelectedModel {
        pca: full.truncate(k)?,
        ridge,
        candidates,
        scores,
        skipped,
    })
}

/// Row lookup for a feature matrix.
pub struct FeatureIndex<'a> {
    features: &'a EmbeddingMatrix,
    rows: HashMap<&'a FaceId, usize>,
}

impl<'a> FeatureIndex<'a> {
    pub fn new(features: &'a EmbeddingMatrix) -> Self {
        Self {
            features,
            rows: features.face_ids().iter().zip(0..).collect(),
        }
    }

    pub fn features(&self) -> &'a EmbeddingMatrix {
        self.features
    }

    pub fn contains(&self, face: &FaceId) -> bool {
        self.rows.contains_key(face)
    }

    pub fn gather(&self, faces: &[FaceId]) -> Result<DMatrix<f64>> {
        let rows = faces
            .iter()
            .map(|f| {
                self.rows
                    .get(f)
                    .copied()
                    .ok_or_else(|| Error::NotFound(format!("face `{f}` has no `{}` features", self.features.layer_name())))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.features.gather(&rows))
    }
}

fn gather_targets(targets: &BTreeMap<FaceId, f64>, faces: &[FaceId]) -> Result<DVector<f64>> {
    faces
        .iter()
        .map(|f| targets.get(f).copied().ok_or_else(|| Error::NotFound(format!("face `{f}` has no target"))))
        .collect::<Result<Vec<_>>>()
        .map(DVector::from_vec)
}

/// Trains the predictor for one attribute on one repeat's split. Only the
/// train and validation faces are read.
pub fn train_one(
    features: &EmbeddingMatrix,
    targets: &BTreeMap<FaceId, f64>,
    attribute: &Attribute,
    selection: &SelectionConfig,
    split: &FaceSplit,
) -> Result<TrainedPredictor> {
    train_indexed(&FeatureIndex::new(features), targets, attribute, selection, split)
}

/// PCA fits keyed by the exact training face list, so attributes sharing a
/// training set within one repeat reuse one decomposition.
pub type PcaCache = HashMap<Vec<FaceId>, CandidatePca>;

pub fn train_indexed(
    index: &FeatureIndex,
    targets: &BTreeMap<FaceId, f64>,
    attribute: &Attribute,
    selection: &SelectionConfig,
    split: &FaceSplit,
) -> Result<TrainedPredictor> {
    train_cached(index, targets, attribute, selection, split, &mut PcaCache::new())
}

pub fn train_cached(
    index: &FeatureIndex,
    targets: &BTreeMap<FaceId, f64>,
    attribute: &Attribute,
    selection: &SelectionConfig,
    split: &FaceSplit,
    cache: &mut PcaCache,
) -> Result<TrainedPredictor> {
    let x_train = index.gather(&split.train)?;
    let y_train = gather_targets(targets, &split.train)?;
    let x_val = index.gather(&split.validation)?;
    let y_val = gather_targets(targets, &split.validation)?;
    check_targets(&x_train, &y_train, &x_val)?;
    let fitted = match cache.get(&split.train) {
        Some(f) => f,
        None => {
            let f = fit_candidate_pca(&x_train, selection)?;
            cache.entry(split.train.clone()).or_insert(f)
        }
    };
    let m = select_with_pca(fitted, &x_train, &y_train, &x_val, &y_val, selection)?;
    Ok(TrainedPredictor {
        attribute: attribute.clone(),
        feature_source: index.features().layer_name().to_string(),
        selection: SelectionRecord {
            pca_dim: m.pca.n_components(),
            lambda: m.ridge.lambda,
            pca_candidates: m.candidates,
            lambda_grid: selection.lambdas.values().to_vec(),
            scores: m.scores,
            skipped: m.skipped,
            master_seed: split.master_seed,
            repeat_index: split.repeat_index,
            attribute_seed: attribute_seed(split.master_seed, split.repeat_index, attribute),
        },
        pca: m.pca,
        ridge: m.ridge,
    })
}
