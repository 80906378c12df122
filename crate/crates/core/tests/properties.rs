//! Property tests over randomized inputs.

mod common;

use std::collections::BTreeMap;

use facet::data::{
    average_ratings, landmarks_to_csv, parse_landmarks, Attribute, FaceId, LandmarkSet, RatingsTable,
    NUM_LANDMARKS,
};
use facet::eval::{attribute_heatmap, heatmap_similarity, sample_stddev, split_half_consistency};
use facet::femb::EmbeddingMatrix;
use facet::geom::{canny_edges, CannyThresholds, ImagePatch};
use facet::pipeline::{
    load_predictor, predict_faces, save_predictor, train_one, FaceSplit, SelectionConfig, TrainedPredictor,
};
use facet::reduce::pca_fit;
use facet::ridge::{LambdaGrid, RidgeSystem};
use facet::split::{make_split_of, SplitSpec};
use facet::synth::{generate, SynthSpec};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;

fn face(i: usize) -> FaceId {
    FaceId::new(format!("f{i:03}")).unwrap()
}

fn ratings_strategy() -> impl Strategy<Value = Vec<(usize, usize, usize, u8)>> {
    prop::collection::vec((0usize..12, 0usize..3, 0usize..6, 1u8..=9), 1..60)
}

fn build_table(rows: &[(usize, usize, usize, u8)]) -> RatingsTable {
    let attrs = ["attractive", "happy", "calm"];
    let mut t = RatingsTable::new();
    let mut seen = std::collections::HashSet::new();
    for &(f, a, r, s) in rows {
        if seen.insert((f, a, r)) {
            t.insert(face(f), Attribute::new(attrs[a]).unwrap(), format!("r{r}"), s).unwrap();
        }
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ratings_round_trip(rows in ratings_strategy()) {
        let first = build_table(&rows).to_csv();
        let again = RatingsTable::parse(&first, "mem").unwrap().to_csv();
        prop_assert_eq!(first, again);
    }

    #[test]
    fn averages_stay_within_cell_range(rows in ratings_strategy()) {
        let t = build_table(&rows);
        for attr in t.attributes() {
            let avg = average_ratings(&t, &attr).unwrap();
            for (f, a, cell) in t.cells() {
                if *a != attr {
                    continue;
                }
                let lo = cell.iter().map(|r| r.score).min().unwrap() as f64;
                let hi = cell.iter().map(|r| r.score).max().unwrap() as f64;
                prop_assert!(avg[f] >= lo && avg[f] <= hi);
            }
        }
    }

    #[test]
    fn landmarks_round_trip(coords in prop::collection::vec(-1e4f64..1e4, NUM_LANDMARKS * 2 * 3)) {
        let mut sets = BTreeMap::new();
        for (i, chunk) in coords.chunks(NUM_LANDMARKS * 2).enumerate() {
            let pts = chunk.chunks(2).map(|c| [c[0], c[1]]).collect();
            sets.insert(face(i), LandmarkSet::new(pts).unwrap());
        }
        let first = landmarks_to_csv(&sets);
        let parsed = parse_landmarks(&first, "mem").unwrap();
        prop_assert_eq!(&parsed, &sets);
        prop_assert_eq!(first, landmarks_to_csv(&parsed));
    }

    #[test]
    fn femb_round_trip(n in 1usize..6, d in 1usize..9, seed in any::<u64>(), layer in "[a-z0-9_.]{0,12}") {
        let mut r = rng(seed);
        let faces: Vec<FaceId> = (0..n).map(face).collect();
        let data: Vec<f32> = random_matrix(&mut r, n, d).iter().map(|v| *v as f32 * 1e3).collect();
        let m = EmbeddingMatrix::new(layer, faces, d, data).unwrap();
        let bytes = m.to_bytes();
        let back = EmbeddingMatrix::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn splits_partition_and_repeat(n in 5usize..80, seed in any::<u64>(), rep in 0u32..1000) {
        let items: Vec<usize> = (0..n).collect();
        let spec = SplitSpec::new(seed, rep);
        let (tr, va, te) = make_split_of(&items, &spec).unwrap();
        prop_assert_eq!((tr.clone(), va.clone(), te.clone()), make_split_of(&items, &spec).unwrap());
        let mut all: Vec<usize> = tr.into_iter().chain(va).chain(te).collect();
        all.sort();
        prop_assert_eq!(all, items);
    }

    #[test]
    fn pca_basis_orthonormal_and_ordered(rows in 3usize..30, cols in 1usize..12, seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, rows, cols);
        let k = (rows - 1).min(cols);
        let m = pca_fit(&x, k, false).unwrap();
        let kk = m.n_components();
        let gram = &m.basis * m.basis.transpose();
        prop_assert!((gram - DMatrix::identity(kk, kk)).amax() < 1e-8);
        prop_assert!(m.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
        let total: f64 = m.explained_variance_ratio.iter().sum();
        prop_assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn loo_matches_refits(n in 6usize..30, k in 1usize..6, seed in any::<u64>(), log_lambda in -2.0f64..2.0) {
        prop_assume!(k + 2 < n);
        let mut r = rng(seed);
        let z = random_matrix(&mut r, n, k);
        let y: Vec<f64> = random_matrix(&mut r, n, 1).iter().copied().collect();
        let lambda = 10f64.powf(log_lambda);
        let fast = RidgeSystem::new(&z, &dvec(&y)).unwrap().loo_residuals(lambda).unwrap();
        for (a, b) in fast.iter().zip(loo_by_refit(&z, &y, lambda)) {
            prop_assert!(relative_error(*a, b) < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn heatmap_ignores_face_order(seed in any::<u64>(), n in 4usize..40) {
        let mut r = rng(seed);
        let cols = random_matrix(&mut r, n, 4);
        let names = ["a", "b", "c", "d"];
        let scores = |order: &[usize]| -> Vec<(Attribute, Vec<f64>)> {
            names
                .iter()
                .enumerate()
                .map(|(j, a)| (Attribute::new(*a).unwrap(), order.iter().map(|&i| cols[(i, j)]).collect()))
                .collect()
        };
        let identity: Vec<usize> = (0..n).collect();
        let mut shuffled = identity.clone();
        facet::rng::SplitMix64::new(seed).shuffle(&mut shuffled);
        let h1 = attribute_heatmap(&scores(&identity)).unwrap();
        let h2 = attribute_heatmap(&scores(&shuffled)).unwrap();
        prop_assert!((&h1.matrix - &h2.matrix).amax() < 1e-12);
        prop_assert!((heatmap_similarity(&h1, &h2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canny_matches_reference_on_small_patches(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
        let mut r = rng(seed);
        let noise = random_matrix(&mut r, w * h, 3);
        let pixels: Vec<[u8; 3]> = (0..w * h)
            .map(|i| [0, 1, 2].map(|c| ((noise[(i, c)] + 1.0) * 127.5) as u8))
            .collect();
        let patch = ImagePatch::from_fn(w, h, |x, y| pixels[y * w + x]).unwrap();
        let t = CannyThresholds::default();
        prop_assert_eq!(canny_edges(&patch, t), naive_canny(w, h, &pixels, t.low, t.high));
    }
}

#[test]
fn split_half_mean_ignores_face_order() {
    let bundle = generate(&SynthSpec { n_faces: 40, ..SynthSpec::toy() }).unwrap();
    let attr = &bundle.attributes[0];
    let forward = split_half_consistency(&bundle.ratings, attr, 20, 5).unwrap();
    // rebuild the table with faces inserted in reverse order
    let mut reversed = RatingsTable::new();
    let mut cells: Vec<_> = bundle.ratings.cells().collect();
    cells.reverse();
    for (f, a, ratings) in cells {
        for r in ratings.iter().rev() {
            reversed.insert(f.clone(), a.clone(), r.rater.clone(), r.score).unwrap();
        }
    }
    let backward = split_half_consistency(&reversed, attr, 20, 5).unwrap();
    assert!((forward.mean_correlation - backward.mean_correlation).abs() < 1e-12);
}

#[test]
fn standard_error_shrinks_with_square_root_of_repeats() {
    let bundle = generate(&SynthSpec { n_faces: 60, rater_noise_sd: 2.0, ..SynthSpec::toy() }).unwrap();
    let attr = &bundle.attributes[0];
    let spread = |repeats: usize| {
        let means: Vec<f64> = (0..400u64)
            .map(|seed| split_half_consistency(&bundle.ratings, attr, repeats, 1000 + seed).unwrap().mean_correlation)
            .collect();
        sample_stddev(&means)
    };
    let (s5, s10, s20) = (spread(5), spread(10), spread(20));
    // four times the repeats halves the standard error; twice gives 1/sqrt(2)
    let quad = s5 / s20;
    let double = s5 / s10;
    assert!((1.7..2.3).contains(&quad), "quadrupling ratio {quad}");
    assert!((1.25..1.6).contains(&double), "doubling ratio {double}");
}

fn hygiene_fixture() -> (EmbeddingMatrix, BTreeMap<FaceId, f64>, FaceSplit) {
    let bundle = generate(&SynthSpec { n_faces: 80, ..SynthSpec::toy() }).unwrap();
    let targets = average_ratings(&bundle.ratings, &bundle.attributes[0]).unwrap();
    let (train, validation, test) = make_split_of(&bundle.faces, &SplitSpec::new(3, 0)).unwrap();
    let split = FaceSplit { train, validation, test, master_seed: 3, repeat_index: 0 };
    (bundle.embeddings, targets, split)
}

fn small_selection() -> SelectionConfig {
    SelectionConfig {
        pca_dims: vec![2, 4, 8, 16],
        lambdas: LambdaGrid::log_spaced(1e-3, 1e3, 7).unwrap(),
        standardize: false,
    }
}

#[test]
fn test_faces_never_reach_training() {
    let (features, targets, split) = hygiene_fixture();
    let attr = Attribute::new("attractive").unwrap();
    let clean = train_one(&features, &targets, &attr, &small_selection(), &split).unwrap();

    let test_rows: Vec<usize> = split.test.iter().map(|f| features.index_of(f).unwrap()).collect();
    let d = features.d();
    let mut data = features.data().to_vec();
    for &i in &test_rows {
        data[i * d..(i + 1) * d].fill(1e6);
    }
    let poisoned = EmbeddingMatrix::new(features.layer_name(), features.face_ids().to_vec(), d, data).unwrap();
    let mut bad_targets = targets.clone();
    for f in &split.test {
        bad_targets.insert(f.clone(), -1e6);
    }
    let dirty = train_one(&poisoned, &bad_targets, &attr, &small_selection(), &split).unwrap();
    assert_eq!(clean.to_bytes(), dirty.to_bytes());
}

#[test]
fn saved_predictor_scores_identically() {
    let (features, targets, split) = hygiene_fixture();
    let attr = Attribute::new("attractive").unwrap();
    let p: TrainedPredictor = train_one(&features, &targets, &attr, &small_selection(), &split).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.fprd");
    save_predictor(&p, &path).unwrap();
    let loaded = load_predictor(&path).unwrap();

    let mut r = rng(42);
    let inputs = random_matrix(&mut r, 100, features.d()).map(|v| v * 3.0);
    let a = p.predict_matrix(&inputs).unwrap();
    let b = loaded.predict_matrix(&inputs).unwrap();
    assert!((a - b).amax() <= 1e-12);

    let faces = features.face_ids().to_vec();
    assert_eq!(predict_faces(&p, &features, &faces).unwrap(), predict_faces(&loaded, &features, &faces).unwrap());
}
