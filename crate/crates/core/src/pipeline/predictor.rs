//! Trained per-attribute predictors and the `FPRD` file format.
//!
//! Little-endian layout after the magic `b"FPRD"` and a u32 version (1).
//! Strings are u32 length + UTF-8; vectors are u64 length + elements;
//! matrices are u64 rows, u64 cols, then row-major f64.
//!
//! 1. attribute (string), feature source (string)
//! 2. PCA: mean (f64 vector), scale flag (u8) + scale (f64 vector, if flag is 1),
//!    basis (matrix), explained variance, explained variance ratio (f64 vectors),
//!    rank-deficient flag (u8)
//! 3. ridge: weights (f64 vector), intercept, lambda, training target mean (f64)
//! 4. selection: chosen dim (u64), chosen lambda (f64), candidate dims
//!    (u64 vector), lambda grid (f64 vector), validation scores (u64 count of
//!    dim u64 + lambda f64 + Pearson f64 records), skipped dims (u64 vector),
//!    master seed (u64), repeat index (u32), attribute seed (u64)

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::data::{Attribute, FaceId};
use crate::error::{Error, Result};
use crate::femb::{put_str, EmbeddingMatrix, Reader};
use crate::reduce::PcaModel;
use crate::ridge::RidgeModel;

pub const FPRD_MAGIC: &[u8; 4] = b"FPRD";
pub const FPRD_VERSION: u32 = 1;

/// Validation score of one PCA-dimension candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub dim: usize,
    pub lambda: f64,
    pub validation_pearson: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRecord {
    pub pca_dim: usize,
    pub lambda: f64,
    pub pca_candidates: Vec<usize>,
    pub lambda_grid: Vec<f64>,
    pub scores: Vec<CandidateScore>,
    /// Candidates dropped because leave-one-out hit a leverage-one row.
    pub skipped: Vec<usize>,
    pub master_seed: u64,
    pub repeat_index: u32,
    pub attribute_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPredictor {
    pub attribute: Attribute,
    pub feature_source: String,
    pub pca: PcaModel,
    pub ridge: RidgeModel,
    pub selection: SelectionRecord,
}

impl TrainedPredictor {
    /// Predictions for the rows of a raw feature matrix.
    pub fn predict_matrix(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.ridge.predict(&self.pca.transform(x)?)
    }

    /// Weight of each input feature on the output: `basis' w`, divided by the
    /// per-column scale when the PCA was standardised. The prediction equals
    /// `intercept + sum_j (x_j - mean_j) * effective_j`, where intercept
    /// includes the ridge intercept.
    pub fn effective_weights(&self) -> DVector<f64> {
        let mut w = self.pca.basis.transpose() * &self.ridge.weights;
        if let Some(s) = &self.pca.scale {
            w.component_div_assign(s);
        }
        w
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(FPRD_MAGIC);
        out.extend_from_slice(&FPRD_VERSION.to_le_bytes());
        put_str(&mut out, self.attribute.as_str());
        put_str(&mut out, &self.feature_source);

        let p = &self.pca;
        put_f64s(&mut out, p.mean.as_slice());
        match &p.scale {
            Some(s) => {
                out.push(1);
                put_f64s(&mut out, s.as_slice());
            }
            None => out.push(0),
        }
        put_matrix(&mut out, &p.basis);
        put_f64s(&mut out, &p.explained_variance);
        put_f64s(&mut out, &p.explained_variance_ratio);
        out.push(p.rank_deficient as u8);

        let r = &self.ridge;
        put_f64s(&mut out, r.weights.as_slice());
        for v in [r.intercept, r.lambda, r.training_target_mean] {
            out.extend_from_slice(&v.to_le_bytes());
        }

        let s = &self.selection;
        out.extend_from_slice(&(s.pca_dim as u64).to_le_bytes());
        out.extend_from_slice(&s.lambda.to_le_bytes());
        put_usizes(&mut out, &s.pca_candidates);
        put_f64s(&mut out, &s.lambda_grid);
        out.extend_from_slice(&(s.scores.len() as u64).to_le_bytes());
        for c in &s.scores {
            out.extend_from_slice(&(c.dim as u64).to_le_bytes());
            out.extend_from_slice(&c.lambda.to_le_bytes());
            out.extend_from_slice(&c.validation_pearson.to_le_bytes());
        }
        put_usizes(&mut out, &s.skipped);
        out.extend_from_slice(&s.master_seed.to_le_bytes());
        out.extend_from_slice(&s.repeat_index.to_le_bytes());
        out.extend_from_slice(&s.attribute_seed.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != FPRD_MAGIC {
            return Err(Error::Format("not a predictor file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FPRD_VERSION {
            return Err(Error::Version {
                found: version,
                supported: FPRD_VERSION,
            });
        }
        let attribute = Attribute::new(r.string()?).map_err(|e| Error::Format(e.to_string()))?;
        let feature_source = r.string()?;

        let mean = DVector::from_vec(get_f64s(&mut r)?);
        let scale = match r.take(1)?[0] {
            0 => None,
            1 => Some(DVector::from_vec(get_f64s(&mut r)?)),
            f => return Err(Error::Format(format!("bad scale flag {f}"))),
        };
        let basis = get_matrix(&mut r)?;
        let explained_variance = get_f64s(&mut r)?;
        let explained_variance_ratio = get_f64s(&mut r)?;
        let rank_deficient = get_flag(&mut r)?;

        let weights = DVector::from_vec(get_f64s(&mut r)?);
        let intercept = r.f64()?;
        let lambda = r.f64()?;
        let training_target_mean = r.f64()?;

        let pca_dim = r.u64()? as usize;
        let chosen_lambda = r.f64()?;
        let pca_candidates = get_usizes(&mut r)?;
        let lambda_grid = get_f64s(&mut r)?;
        let count = r.u64()?;
        if count > r.remaining() as u64 / 24 {
            return Err(Error::Format(format!("score count {count} exceeds file size")));
        }
        let mut scores = Vec::with_capacity(count as usize);
        for _ in 0..count {
            scores.push(CandidateScore {
                dim: r.u64()? as usize,
                lambda: r.f64()?,
                validation_pearson: r.f64()?,
            });
        }
        let skipped = get_usizes(&mut r)?;
        let master_seed = r.u64()?;
        let repeat_index = r.u32()?;
        let attribute_seed = r.u64()?;
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes", r.remaining())));
        }

        let d = mean.len();
        let k = basis.nrows();
        let consistent = basis.ncols() == d
            && scale.as_ref().is_none_or(|s| s.len() == d)
            && explained_variance.len() == k
            && explained_variance_ratio.len() == k
            && weights.len() == k
            && k >= 1
            && !pca_candidates.is_empty()
            && !lambda_grid.is_empty();
        if !consistent {
            return Err(Error::Format("inconsistent predictor dimensions".into()));
        }
        Ok(Self {
            attribute,
            feature_source,
            pca: PcaModel {
                mean,
                scale,
                basis,
                explained_variance,
                explained_variance_ratio,
                rank_deficient,
            },
            ridge: RidgeModel {
                weights,
                intercept,
                lambda,
                training_target_mean,
            },
            selection: SelectionRecord {
                pca_dim,
                lambda: chosen_lambda,
                pca_candidates,
                lambda_grid,
                scores,
                skipped,
                master_seed,
                repeat_index,
                attribute_seed,
            },
        })
    }
}

pub fn save_predictor(p: &TrainedPredictor, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, p.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_predictor(path: impl AsRef<Path>) -> Result<TrainedPredictor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    TrainedPredictor::from_bytes(&bytes)
}

fn check_source(p: &TrainedPredictor, features: &EmbeddingMatrix) -> Result<()> {
    if p.feature_source != features.layer_name() {
        return Err(Error::Source {
            expected: p.feature_source.clone(),
            found: features.layer_name().to_string(),
        });
    }
    Ok(())
}

/// Scores every face of `features`. Values are not clamped to the rating
/// scale.
pub fn predict_scores(p: &TrainedPredictor, features: &EmbeddingMatrix) -> Result<BTreeMap<FaceId, f64>> {
    check_source(p, features)?;
    let rows: Vec<usize> = (0..features.n()).collect();
    let pred = p.predict_matrix(&features.gather(&rows))?;
    Ok(features.face_ids().iter().cloned().zip(pred.iter().copied()).collect())
}

/// Scores the listed faces only.
pub fn predict_faces(
    p: &TrainedPredictor,
    features: &EmbeddingMatrix,
    faces: &[FaceId],
) -> Result<BTreeMap<FaceId, f64>> {
    check_source(p, features)?;
    if faces.is_empty() {
        return Ok(BTreeMap::new());
    }
    let index: BTreeMap<&FaceId, usize> = features.face_ids().iter().zip(0..).collect();
    let rows = faces
        .iter()
        .map(|f| index.get(f).copied().ok_or_else(|| Error::NotFound(format!("face `{f}` has no features"))))
        .collect::<Result<Vec<_>>>()?;
    let pred = p.predict_matrix(&features.gather(&rows))?;
    Ok(faces.iter().cloned().zip(pred.iter().copied()).collect())
}

/// Fraction of predictions outside the 1..=9 rating scale.
pub fn out_of_range_fraction(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| !(1.0..=9.0).contains(*v)).count() as f64 / values.len() as f64
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_usizes(out: &mut Vec<u8>, v: &[usize]) {
    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
    for x in v {
        out.extend_from_slice(&(*x as u64).to_le_bytes());
    }
}

fn put_matrix(out: &mut Vec<u8>, m: &DMatrix<f64>) {
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
}

fn checked_len(r: &Reader, len: u64, width: u64) -> Result<usize> {
    if len > r.remaining() as u64 / width {
        return Err(Error::Format(format!("length {len} exceeds remaining file size")));
    }
    Ok(len as usize)
}

fn get_f64s(r: &mut Reader) -> Result<Vec<f64>> {
    let len = r.u64()?;
    let len = checked_len(r, len, 8)?;
    (0..len).map(|_| r.f64()).collect()
}

fn get_usizes(r: &mut Reader) -> Result<Vec<usize>> {
    let len = r.u64()?;
    let len = checked_len(r, len, 8)?;
    (0..len).map(|_| r.u64().map(|v| v as usize)).collect()
}

fn get_matrix(r: &mut Reader) -> Result<DMatrix<f64>> {
    let rows = r.u64()?;
    let cols = r.u64()?;
    let total = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
    let total = checked_len(r, total, 8)?;
    let values = (0..total).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_row_slice(rows as usize, cols as usize, &values))
}

fn get_flag(r: &mut Reader) -> Result<bool> {
    match r.take(1)?[0] {
        0 => Ok(false),
        1 => Ok(true),
        f => Err(Error::Format(format!("bad flag byte {f}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduce::pca_fit;

    /// 2-feature predictor with identity basis and known weights:
    /// y = 1 + 2 (x0 - 1) - 0.5 (x1 - 3).
    fn toy() -> TrainedPredictor {
        TrainedPredictor {
            attribute: Attribute::new("happy").unwrap(),
            feature_source: "conv".into(),
            pca: PcaModel {
                mean: DVector::from_vec(vec![1.0, 3.0]),
                scale: None,
                basis: DMatrix::identity(2, 2),
                explained_variance: vec![2.0, 1.0],
                explained_variance_ratio: vec![2.0 / 3.0, 1.0 / 3.0],
                rank_deficient: false,
            },
            ridge: RidgeModel {
                weights: DVector::from_vec(vec![2.0, -0.5]),
                intercept: 1.0,
                lambda: 0.1,
                training_target_mean: 1.0,
            },
            selection: SelectionRecord {
                pca_dim: 2,
                lambda: 0.1,
                pca_candidates: vec![1, 2],
                lambda_grid: vec![0.1, 1.0],
                scores: vec![
                    CandidateScore { dim: 1, lambda: 1.0, validation_pearson: 0.5 },
                    CandidateScore { dim: 2, lambda: 0.1, validation_pearson: 0.9 },
                ],
                skipped: vec![],
                master_seed: 11,
                repeat_index: 3,
                attribute_seed: 12345,
            },
        }
    }

    fn feats(layer: &str) -> EmbeddingMatrix {
        EmbeddingMatrix::new(
            layer,
            vec![FaceId::new("a").unwrap(), FaceId::new("b").unwrap()],
            2,
            vec![1.0, 3.0, 2.0, 5.0],
        )
        .unwrap()
    }

    #[test]
    fn hand_composed_chain() {
        let s = predict_scores(&toy(), &feats("conv")).unwrap();
        assert_eq!(s[&FaceId::new("a").unwrap()], 1.0);
        // 1 + 2*1 - 0.5*2
        assert_eq!(s[&FaceId::new("b").unwrap()], 2.0);
        assert_eq!(toy().effective_weights().as_slice(), &[2.0, -0.5]);
    }

    #[test]
    fn source_mismatch_and_empty_list() {
        assert!(matches!(predict_scores(&toy(), &feats("fc7")), Err(Error::Source { .. })));
        assert!(predict_faces(&toy(), &feats("conv"), &[]).unwrap().is_empty());
    }

    #[test]
    fn round_trip_bytes() {
        let p = toy();
        let back = TrainedPredictor::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.to_bytes(), p.to_bytes());
    }

    #[test]
    fn standardised_round_trip_and_effective_weights() {
        let x = DMatrix::from_fn(12, 4, |i, j| ((i * 5 + j * 7) % 9) as f64 * (j + 1) as f64 + 0.1 * i as f64);
        let pca = pca_fit(&x, 3, true).unwrap();
        let mut p = toy();
        p.pca = pca;
        p.ridge.weights = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        let back = TrainedPredictor::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(back, p);
        let pred = p.predict_matrix(&x).unwrap();
        let eff = p.effective_weights();
        for i in 0..x.nrows() {
            let lin: f64 = p.ridge.intercept
                + (0..4).map(|j| (x[(i, j)] - p.pca.mean[j]) * eff[j]).sum::<f64>();
            assert!((lin - pred[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn corrupt_files() {
        let bytes = toy().to_bytes();
        for cut in [0, 3, 8, 20, bytes.len() - 1] {
            assert!(matches!(TrainedPredictor::from_bytes(&bytes[..cut]), Err(Error::Format(_))), "cut {cut}");
        }
        let mut future = bytes.clone();
        future[4..8].copy_from_slice(&2u32.to_le_bytes());
        match TrainedPredictor::from_bytes(&future) {
            Err(Error::Version { found: 2, supported: 1 }) => {}
            other => panic!("{other:?}"),
        }
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(TrainedPredictor::from_bytes(&extra), Err(Error::Format(_))));
    }

    #[test]
    fn out_of_range() {
        assert_eq!(out_of_range_fraction(&[0.5, 1.0, 9.0, 9.5]), 0.5);
        assert_eq!(out_of_range_fraction(&[]), 0.0);
    }
}
