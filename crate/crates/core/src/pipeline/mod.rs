//! Experiment orchestration: configuration, nested model selection,
//! repeated evaluation, predictor persistence and reports.

pub mod config;
pub mod evaluate;
pub mod predictor;
pub mod report;
pub mod train;

pub use config::{seed_from_env, ExperimentConfig, SeedSource, SelectionConfig, DEFAULT_PCA_DIMS, SEED_ENV};
pub use evaluate::{
    evaluate_config, evaluate_repeats, summarize, train_repeat, CellOutcome, EvalReport, EvalSettings,
    ExperimentData, FeatureSource, Provenance, SourceCell, SourceRole,
};
pub use predictor::{
    load_predictor, out_of_range_fraction, predict_faces, predict_scores, save_predictor, CandidateScore,
    SelectionRecord, TrainedPredictor, FPRD_MAGIC, FPRD_VERSION,
};
pub use report::{
    failures_text, long_csv, provenance_text, wide_csv, write_report, FAILURES, HUMAN_HEATMAP, LONG_HEADER, MODEL_HEATMAP,
    PROVENANCE, REPORT_CSV, TABLE_CSV, WIDE_HEADER,
};
pub use train::{
    attribute_seed, fit_candidate_pca, select_model, select_with_pca, train_cached, train_indexed, train_one,
    CandidatePca, FaceSplit, FeatureIndex, PcaCache, SelectedModel,
};
