//! CSV, SVG and provenance output for an [`EvalReport`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::SeedSource;
use super::evaluate::{summarize, EvalReport, Provenance, SourceRole};
use crate::error::{Error, Result};

pub const LONG_HEADER: &str = "attribute,source,metric,mean,stddev,n_repeats";
pub const WIDE_HEADER: &str = "attribute,baseline1,baseline2,model";

/// File names written by [`write_report`].
pub const REPORT_CSV: &str = "report.csv";
pub const TABLE_CSV: &str = "table1.csv";
pub const HUMAN_HEATMAP: &str = "heatmap_human";
pub const MODEL_HEATMAP: &str = "heatmap_model";
pub const FAILURES: &str = "failures.txt";
pub const PROVENANCE: &str = "provenance.txt";

fn row(out: &mut String, attr: &str, source: &str, metric: &str, values: std::result::Result<&[f64], &String>) {
    match values {
        Ok(v) => {
            let (m, s) = summarize(v);
            let _ = writeln!(out, "{attr},{source},{metric},{m:.6},{s:.6},{}", v.len());
        }
        Err(_) => {
            let _ = writeln!(out, "{attr},{source},{metric},failed,failed,0");
        }
    }
}

/// Long-format table: Baseline I (source `human`), then per source the test
/// Pearson and out-of-range fraction, then per-source heatmap similarity
/// (attribute `*`). Failed cells read `failed`.
pub fn long_csv(report: &EvalReport) -> String {
    let mut out = format!("{LONG_HEADER}\n");
    for (a, attr) in report.attributes.iter().enumerate() {
        let b1 = report.baseline1[a].as_ref().map(|c| c.per_repeat.as_slice());
        row(&mut out, attr.as_str(), "human", "split_half_pearson", b1);
        for (s, (name, _)) in report.sources.iter().enumerate() {
            let cell = report.cells[a][s].as_ref();
            row(&mut out, attr.as_str(), name, "test_pearson", cell.map(|c| c.test_pearson.as_slice()));
            row(&mut out, attr.as_str(), name, "out_of_range_fraction", cell.map(|c| c.out_of_range.as_slice()));
        }
    }
    for (s, (name, _)) in report.sources.iter().enumerate() {
        row(&mut out, "*", name, "heatmap_similarity", report.heatmap_similarity[s].as_ref().map(|v| v.as_slice()));
    }
    out
}

/// Three-column table of mean correlations: Baseline I, Baseline II (first
/// geometric source) and the primary model. `NA` marks an absent source.
pub fn wide_csv(report: &EvalReport) -> String {
    let mut out = format!("{WIDE_HEADER}\n");
    let geom = report.geometry_source();
    let model = report.primary_model.as_deref().and_then(|m| report.source_index(m));
    let fmt_cell = |a: usize, s: Option<usize>| match s {
        None => "NA".to_string(),
        Some(s) => match &report.cells[a][s] {
            Ok(c) => format!("{:.6}", summarize(&c.test_pearson).0),
            Err(_) => "failed".to_string(),
        },
    };
    for (a, attr) in report.attributes.iter().enumerate() {
        let b1 = match &report.baseline1[a] {
            Ok(c) => format!("{:.6}", c.mean_correlation),
            Err(_) => "failed".to_string(),
        };
        let _ = writeln!(out, "{attr},{b1},{},{}", fmt_cell(a, geom), fmt_cell(a, model));
    }
    out
}

pub fn failures_text(report: &EvalReport) -> String {
    report
        .failures()
        .into_iter()
        .map(|(a, s, e)| format!("{a}\t{s}\t{}\n", e.replace(['\n', '\t'], " ")))
        .collect()
}

pub fn provenance_text(p: &Provenance, primary_model: Option<&str>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "tool = facet {}", p.tool_version);
    if let Some(h) = &p.config_hash {
        let _ = writeln!(out, "config_sha256 = {h}");
    }
    let _ = writeln!(out, "master_seed = {}", p.master_seed);
    let origin = match p.seed_source {
        SeedSource::Config => "config",
        SeedSource::Environment => "FACET_SEED",
    };
    let _ = writeln!(out, "seed_source = {origin}");
    let _ = writeln!(out, "repeats = {}", p.repeats);
    let f = p.fractions;
    let _ = writeln!(out, "split = {} {} {}", f.train, f.validation, f.test);
    let dims: Vec<String> = p.pca_dims.iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "pca_dims = {}", dims.join(" "));
    let lambdas: Vec<String> = p.lambdas.iter().map(|l| format!("{l:e}")).collect();
    let _ = writeln!(out, "lambdas = {}", lambdas.join(" "));
    let _ = writeln!(out, "standardize = {}", p.standardize);
    for (name, n, d) in &p.sources {
        let _ = writeln!(out, "source = {name} n={n} d={d}");
    }
    let _ = writeln!(out, "common_faces = {}", p.common_faces);
    let _ = writeln!(out, "geom_excluded_faces = {}", p.geom_excluded);
    if let Some(m) = primary_model {
        let _ = writeln!(out, "primary_model = {m}");
    }
    out
}

/// Role label used in listings.
pub fn role_name(role: SourceRole) -> &'static str {
    match role {
        SourceRole::Geometry => "baseline2",
        SourceRole::Embedding => "model",
    }
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the report files into `dir` (created if needed) and returns their
/// paths.
pub fn write_report(report: &EvalReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, contents: String| -> Result<()> {
        let path = dir.join(name);
        write_file(&path, contents)?;
        written.push(path);
        Ok(())
    };
    put(REPORT_CSV.into(), long_csv(report))?;
    put(TABLE_CSV.into(), wide_csv(report))?;
    if let Some(h) = &report.human_heatmap {
        put(format!("{HUMAN_HEATMAP}.csv"), h.to_csv())?;
        put(format!("{HUMAN_HEATMAP}.svg"), h.to_svg("Human ratings: attribute Spearman correlation"))?;
    }
    if let (Some(h), Some(m)) = (&report.model_heatmap, &report.primary_model) {
        put(format!("{MODEL_HEATMAP}.csv"), h.to_csv())?;
        put(
            format!("{MODEL_HEATMAP}.svg"),
            h.to_svg(&format!("Model predictions ({m}, repeat 0 test faces): attribute Spearman correlation")),
        )?;
    }
    put(FAILURES.into(), failures_text(report))?;
    put(PROVENANCE.into(), provenance_text(&report.provenance, report.primary_model.as_deref()))?;
    Ok(written)
}
