//! Command-line interface: one subcommand per pipeline stage.
//!
//! Exit codes: 0 success, 1 data or numeric error, 2 usage or config error.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::data::{load_landmarks, Attribute, RatingsTable};
use crate::error::{Error, Result};
use crate::eval::{attribution_top_k, split_half_consistency};
use crate::femb::EmbeddingMatrix;
use crate::geom::{geom_feature_matrix, GeomConfig};
use crate::pipeline::report::{provenance_text, role_name, write_file, LONG_HEADER};
use crate::pipeline::{
    evaluate_config, load_predictor, out_of_range_fraction, predict_scores, save_predictor, seed_from_env,
    train_repeat, write_report, EvalSettings, ExperimentConfig, ExperimentData, Provenance, SEED_ENV,
};

#[derive(Debug, Parser)]
#[command(name = "facet", version, about = "Predict social judgments of faces from embeddings and geometry")]
pub struct Cli {
    /// Worker threads for repeats and attributes (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute geometric features from landmarks and write a FEMB file.
    Geom(GeomArgs),
    /// Split-half rater consistency (human baseline) per attribute.
    Consistency(ConsistencyArgs),
    /// Train one predictor per attribute and feature source on repeat 0.
    Train(RunArgs),
    /// Run the repeated evaluation and write reports and heatmaps.
    Eval(RunArgs),
    /// Score faces with a saved predictor.
    Predict(PredictArgs),
    /// Rank feature units by their contribution to a predictor's output.
    Attribution(AttributionArgs),
}

#[derive(Debug, Args)]
pub struct GeomArgs {
    /// Landmarks CSV (face_id, x0, y0, ..., x67, y67).
    #[arg(long)]
    pub landmarks: PathBuf,
    /// Directory of `<face_id>.ppm` skin patches; enables the skin windows.
    #[arg(long)]
    pub images_dir: Option<PathBuf>,
    /// Geometry definition file (default: built-in geom-v1).
    #[arg(long)]
    pub geom_config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    #[arg(long)]
    pub ratings: PathBuf,
    /// Attribute to evaluate (repeatable).
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pub attribute: Vec<String>,
    /// Evaluate every attribute in the ratings file.
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    /// Master seed; FACET_SEED overrides it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub predictor: PathBuf,
    /// FEMB file from the predictor's feature source.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AttributionArgs {
    #[arg(long)]
    pub predictor: PathBuf,
    /// FEMB file of unit activations (n faces x u units).
    #[arg(long)]
    pub activations: PathBuf,
    #[arg(long, default_value_t = 9)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.jobs {
        Some(0) => Err(Error::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Geom(a) => cmd_geom(&a),
        Command::Consistency(a) => cmd_consistency(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Attribution(a) => cmd_attribution(&a),
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `<out>.<suffix>` next to an output file.
fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{suffix}"));
    out.with_file_name(name)
}

/// Writes `<out>.provenance.txt` listing the tool version, command, inputs
/// with their hashes, and any extra `key = value` lines.
fn write_provenance(out: &Path, command: &str, inputs: &[&Path], extra: &[(&str, String)]) -> Result<()> {
    let mut text = format!("tool = facet {}\ncommand = {command}\n", env!("CARGO_PKG_VERSION"));
    for p in inputs {
        let _ = writeln!(text, "input = {} sha256={}", p.display(), sha256_file(p)?);
    }
    for (k, v) in extra {
        let _ = writeln!(text, "{k} = {v}");
    }
    write_file(&sidecar(out, "provenance.txt"), text)
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let seed = seed_from_env()?;
    let config = ExperimentConfig::load(path, seed)?;
    if seed.is_some() {
        log::info!("{SEED_ENV} overrides the configured seed: {}", config.seed);
    }
    log::info!("config {} sha256={} seed={}", path.display(), config.hash, config.seed);
    Ok(config)
}

pub fn cmd_geom(a: &GeomArgs) -> Result<()> {
    let config = match &a.geom_config {
        Some(p) => GeomConfig::load(p)?,
        None => GeomConfig::default(),
    };
    let landmarks = load_landmarks(&a.landmarks)?;
    let batch = geom_feature_matrix(&landmarks, a.images_dir.as_deref(), &config)?;
    batch.matrix.save(&a.out)?;
    let excluded: String = batch
        .excluded
        .iter()
        .map(|(f, why)| format!("{f}\t{}\n", why.replace(['\n', '\t'], " ")))
        .collect();
    write_file(&sidecar(&a.out, "excluded.txt"), excluded)?;
    write_file(&sidecar(&a.out, "features.txt"), batch.names.join("\n") + "\n")?;
    let mut inputs = vec![a.landmarks.as_path()];
    if let Some(p) = &a.geom_config {
        inputs.push(p);
    }
    write_provenance(
        &a.out,
        "geom",
        &inputs,
        &[
            ("geometry", config.version.clone()),
            ("canny", format!("{} {}", config.canny.low, config.canny.high)),
            ("windows", a.images_dir.is_some().to_string()),
            ("faces", batch.matrix.n().to_string()),
            ("features", batch.matrix.d().to_string()),
            ("excluded", batch.excluded.len().to_string()),
        ],
    )?;
    log::info!(
        "wrote {} faces x {} features to {} ({} excluded)",
        batch.matrix.n(),
        batch.matrix.d(),
        a.out.display(),
        batch.excluded.len()
    );
    Ok(())
}

pub fn cmd_consistency(a: &ConsistencyArgs) -> Result<()> {
    let seed = match (seed_from_env()?, a.seed) {
        (Some(s), _) => {
            log::info!("{SEED_ENV} overrides the seed: {s}");
            s
        }
        (None, Some(s)) => s,
        (None, None) => return Err(Error::Config(format!("--seed is required (or set {SEED_ENV})"))),
    };
    if a.repeats == 0 {
        return Err(Error::Config("--repeats must be at least 1".into()));
    }
    let table = RatingsTable::load(&a.ratings)?;
    let attributes = if a.all {
        table.attributes()
    } else {
        a.attribute.iter().map(Attribute::new).collect::<Result<Vec<_>>>()?
    };
    let mut out = format!("{LONG_HEADER}\n");
    for attr in &attributes {
        let r = split_half_consistency(&table, attr, a.repeats, seed)?;
        let _ = writeln!(
            out,
            "{attr},human,split_half_pearson,{:.6},{:.6},{}",
            r.mean_correlation,
            r.stddev(),
            r.per_repeat.len()
        );
    }
    write_file(&a.out, out)?;
    write_provenance(
        &a.out,
        "consistency",
        &[&a.ratings],
        &[("master_seed", seed.to_string()), ("repeats", a.repeats.to_string())],
    )?;
    log::info!("seed={seed} repeats={} attributes={}", a.repeats, attributes.len());
    Ok(())
}

pub fn cmd_train(a: &RunArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    let data = ExperimentData::load(&config)?;
    let settings = EvalSettings::from_config(&config);
    let trained = train_repeat(&settings, &data, 0)?;
    let dir = a.out_dir.join("predictors");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut index = String::from("attribute,source,role,pca_dim,lambda,validation_pearson,file\n");
    let mut failures = String::new();
    for (attr, row) in config.attributes.iter().zip(&trained) {
        for (source, cell) in data.sources.iter().zip(row) {
            match cell {
                Ok(p) => {
                    let file = format!("{}__{}.fprd", file_safe(attr.as_str()), file_safe(source.name()));
                    save_predictor(p, dir.join(&file))?;
                    let val = p
                        .selection
                        .scores
                        .iter()
                        .find(|c| c.dim == p.selection.pca_dim)
                        .map_or(f64::NAN, |c| c.validation_pearson);
                    let _ = writeln!(
                        index,
                        "{attr},{},{},{},{:e},{val:.6},predictors/{file}",
                        source.name(),
                        role_name(source.role),
                        p.selection.pca_dim,
                        p.selection.lambda
                    );
                }
                Err(e) => {
                    let _ = writeln!(index, "{attr},{},{},failed,failed,failed,", source.name(), role_name(source.role));
                    let _ = writeln!(failures, "{attr}\t{}\t{}", source.name(), e.replace(['\n', '\t'], " "));
                }
            }
        }
    }
    write_file(&a.out_dir.join("predictors.csv"), index)?;
    write_file(&a.out_dir.join("failures.txt"), failures)?;
    let mut provenance = provenance_text(
        &Provenance {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: Some(config.hash.clone()),
            master_seed: config.seed,
            seed_source: config.seed_source,
            repeats: config.repeats,
            fractions: config.fractions,
            pca_dims: config.selection.pca_dims.clone(),
            lambdas: config.selection.lambdas.values().to_vec(),
            standardize: config.selection.standardize,
            sources: data.sources.iter().map(|s| (s.name().to_string(), s.matrix.n(), s.matrix.d())).collect(),
            common_faces: data.common_faces().len(),
            geom_excluded: data.geom_excluded.len(),
        },
        None,
    );
    provenance.push_str("trained_on_repeat = 0\n");
    write_file(&a.out_dir.join("provenance.txt"), provenance)?;
    Ok(())
}

pub fn cmd_eval(a: &RunArgs) -> Result<()> {
    let config = load_config(&a.config)?;
    let report = evaluate_config(&config)?;
    let written = write_report(&report, &a.out_dir)?;
    let failed = report.failures().len();
    if failed > 0 {
        log::warn!("{failed} report cells failed; see failures.txt");
    }
    log::info!("wrote {} files to {}", written.len(), a.out_dir.display());
    Ok(())
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let p = load_predictor(&a.predictor)?;
    let features = EmbeddingMatrix::load(&a.features)?;
    let scores = predict_scores(&p, &features)?;
    let mut out = String::from("face_id,score\n");
    for (face, s) in &scores {
        let _ = writeln!(out, "{face},{s}");
    }
    write_file(&a.out, out)?;
    let values: Vec<f64> = scores.values().copied().collect();
    let oor = out_of_range_fraction(&values);
    if oor > 0.0 {
        log::warn!("{:.1}% of predictions fall outside the 1-9 rating scale", 100.0 * oor);
    }
    write_provenance(
        &a.out,
        "predict",
        &[&a.predictor, &a.features],
        &[
            ("attribute", p.attribute.to_string()),
            ("feature_source", p.feature_source.clone()),
            ("master_seed", p.selection.master_seed.to_string()),
            ("out_of_range_fraction", format!("{oor:.6}")),
        ],
    )
}

pub fn cmd_attribution(a: &AttributionArgs) -> Result<()> {
    let p = load_predictor(&a.predictor)?;
    let acts = EmbeddingMatrix::load(&a.activations)?;
    let weights = p.effective_weights();
    if acts.d() != weights.len() {
        return Err(Error::Shape(format!(
            "activations have {} units, predictor expects {}",
            acts.d(),
            weights.len()
        )));
    }
    let rows: Vec<usize> = (0..acts.n()).collect();
    let ranking = attribution_top_k(&acts.gather(&rows), &weights, a.k)?;
    let mut out = String::from("rank,unit,score\n");
    for (rank, (unit, score)) in ranking.top().iter().enumerate() {
        let _ = writeln!(out, "{},{unit},{score}", rank + 1);
    }
    write_file(&a.out, out)?;
    write_provenance(
        &a.out,
        "attribution",
        &[&a.predictor, &a.activations],
        &[
            ("attribute", p.attribute.to_string()),
            ("feature_source", p.feature_source.clone()),
            ("master_seed", p.selection.master_seed.to_string()),
            ("k", a.k.to_string()),
        ],
    )
}
